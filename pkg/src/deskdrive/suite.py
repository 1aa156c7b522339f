"""Deterministic benchmark suite generation and manifest serialization.

A suite is a list of (template, parameter assignment, seed) entries — three
variants per ability by default, 90 routes total. All sampling is derived from
sha256 of (base_seed, template_id, variant, parameter name), so the same base
seed always yields byte-identical manifests on any platform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import SCHEMA_VERSION
from .catalog import ABILITY_IDS, SET_OF
from .library import TEMPLATES
from .scenarios import ScenarioTemplate, TemplateError, _stable_int, instantiate_scenario

VARIANTS_PER_ABILITY = 3


def _unit(*parts) -> float:
    return _stable_int(*parts) / 2.0**64


def sample_params(template: ScenarioTemplate, base_seed: int, variant: int) -> dict:
    params = {}
    for name in sorted(template.parameters):
        schema = template.parameters[name]
        u = _unit("param", base_seed, template.template_id, variant, name)
        if "choices" in schema:
            params[name] = schema["choices"][int(u * len(schema["choices"])) % len(schema["choices"])]
        else:
            lo, hi = schema["min"], schema["max"]
            # round for readable manifests; interior values stay within bounds
            params[name] = min(hi, max(lo, round(lo + u * (hi - lo), 3)))
    return params


@dataclass(frozen=True)
class SuiteEntry:
    route_id: str
    template_id: str
    ability_id: str
    set_tag: str
    params: dict
    seed: int

    def to_dict(self) -> dict:
        return {
            "route_id": self.route_id,
            "template_id": self.template_id,
            "ability_id": self.ability_id,
            "set_tag": self.set_tag,
            "params": self.params,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SuiteEntry":
        return cls(d["route_id"], d["template_id"], d["ability_id"], d["set_tag"],
                   d["params"], d["seed"])


@dataclass(frozen=True)
class SuiteManifest:
    suite_id: str
    base_seed: int
    entries: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "suite_id": self.suite_id,
            "base_seed": self.base_seed,
            "entries": [e.to_dict() for e in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "SuiteManifest":
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise TemplateError(f"unsupported suite schema version {version!r}")
        return cls(
            suite_id=d["suite_id"],
            base_seed=d["base_seed"],
            entries=tuple(SuiteEntry.from_dict(e) for e in d["entries"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "SuiteManifest":
        return cls.from_dict(json.loads(text))


def generate_suite(base_seed: int, variants: int = VARIANTS_PER_ABILITY) -> SuiteManifest:
    entries = []
    for ability_id in ABILITY_IDS:
        template = TEMPLATES[ability_id]
        for variant in range(variants):
            params = sample_params(template, base_seed, variant)
            seed = _stable_int("seed", base_seed, template.template_id, variant) % 10**9
            entries.append(
                SuiteEntry(
                    route_id=f"{template.template_id}:{seed}",
                    template_id=template.template_id,
                    ability_id=ability_id,
                    set_tag=SET_OF[ability_id],
                    params=params,
                    seed=seed,
                )
            )
    return SuiteManifest(suite_id=f"suite-{base_seed}-x{variants}", base_seed=base_seed,
                         entries=tuple(entries))


def instantiate_entry(entry: SuiteEntry):
    """Expand a manifest entry into (RouteSpec, ScenarioRuntime, actors, ego pose)."""
    template = _template_for(entry.template_id)
    return instantiate_scenario(template, entry.params, entry.seed)


def _template_for(template_id: str) -> ScenarioTemplate:
    for tpl in TEMPLATES.values():
        if tpl.template_id == template_id:
            return tpl
    raise TemplateError(f"unknown template {template_id!r}")


def save_manifest(manifest: SuiteManifest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(manifest.to_json())


def load_manifest(path) -> SuiteManifest:
    with open(path, encoding="utf-8") as fh:
        return SuiteManifest.from_json(fh.read())


def save_templates(path) -> None:
    """Write the full template library as one versioned JSON document."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "templates": [TEMPLATES[aid].to_dict() for aid in ABILITY_IDS],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_templates(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise TemplateError(f"unsupported template schema version {doc.get('schema_version')!r}")
    out = {}
    for td in doc["templates"]:
        tpl = ScenarioTemplate.from_dict(td)
        out[tpl.ability_id] = tpl
    return out
