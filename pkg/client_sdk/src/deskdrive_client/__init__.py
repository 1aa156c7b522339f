"""Client SDK for the deskdrive wire protocol.

Connect an external driving policy to a deskdrive evaluation server:

    import deskdrive_client as ddc

    with ddc.connect(("127.0.0.1", 4765), agent="my-policy") as session:
        summary = ddc.run_agent(session, my_policy)

The SDK contains no scoring logic; scores arrive in the server's end message.
"""

from .sample_agents import (
    LawfulFollowerPolicy,
    ObservationView,
    full_throttle_policy,
    lawful_follower_policy,
)
from .session import (
    PROTOCOL_VERSION,
    ClientError,
    ClientSession,
    HandshakeError,
    ProtocolStateError,
    connect,
    run_agent,
)

__version__ = "0.1.0"

__all__ = [
    "PROTOCOL_VERSION",
    "ClientError",
    "ClientSession",
    "HandshakeError",
    "LawfulFollowerPolicy",
    "ObservationView",
    "ProtocolStateError",
    "connect",
    "full_throttle_policy",
    "lawful_follower_policy",
    "run_agent",
    "__version__",
]
