"""
Config Module - the run configuration file: parsing, validation, emission and the builders that turn it into
domains, meshes, networks, coefficients, step settings and initial states.

The native format is flat ``key = value`` lines grouped by ``[section]`` headers with ``#`` comments. Values are
typed with YAML scalar rules, so ``0.25``, ``true``, ``[0.5, 0.5]`` and ``u**2`` all read naturally. Files
ending in .yaml, .yml or .json hold the same section/key tree.
"""
from __future__ import annotations

import difflib
import json
import logging
from copy import deepcopy
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
import yaml

from keller_segel.constants import (
    CLOSE_MATCHES_HINT,
    CORNER_VERTEX_ERROR,
    DECODE_ERROR,
    DEPENDENT_KEY_ERROR,
    DUPLICATE_KEY_ERROR,
    INITIAL_COLUMN_ERROR,
    INITIAL_FORMAT_ERROR,
    INITIAL_KIND_ERROR,
    INITIAL_LENGTH_ERROR,
    INITIAL_READ_ERROR,
    KEY_OUTSIDE_SECTION_ERROR,
    MISSING_KEY_ERROR,
    SECTION_TYPE_ERROR,
    SPECIES,
    SYNTAX_ERROR,
    UNKNOWN_KEY_ERROR,
    UNKNOWN_SECTION_ERROR,
    UNSUPPORTED_FORMAT_ERROR,
    VALUE_ERROR,
    YAML_VALUE_ERROR,
)
from keller_segel.exceptions import ConfigurationError, InitialConditionError
from keller_segel.geometry import DOMAIN_PRESETS, make_domain
from keller_segel.mesh import Grading, load_mesh, refine_uniform, triangulate
from keller_segel.operators import ScalarField
from keller_segel.output import read_snapshot
from keller_segel.reactions import (
    COEFFICIENT_PRESETS,
    CoefficientPair,
    KineticParams,
    ReactionNetwork,
    coefficient_preset,
)
from keller_segel.stepper import AdaptMode, SimState, StepConfig
from keller_segel.utils import Expression
from keller_segel.validators import validate_value

if TYPE_CHECKING:
    from typing import Any

    from keller_segel.geometry import PolygonalDomain
    from keller_segel.mesh import TriMesh

logger = logging.getLogger(__name__)

_POSITIVE = {"type": "number", "minimum": 0, "exclusiveMinimum": True}
_NONNEGATIVE = {"type": "number", "minimum": 0}
_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

_INITIAL_SECTION: dict[str, dict[str, Any]] = {
    "kind": {"type": "string", "enum": ["constant", "gaussian_bump", "nodal_file"], "default": "constant"},
    "value": {"type": "number", "default": 0.0},
    "center": {**_POINT, "default": [0.5, 0.5]},
    "width": {**_POSITIVE, "default": 0.1},
    "amplitude": {"type": "number", "default": 1.0},
    "offset": {"type": "number", "default": 0.0},
    "path": {"type": "string", "nullable": True, "default": None},
}

CONFIG_SCHEMA: dict[str, dict[str, dict[str, Any]]] = {
    "domain": {
        "preset": {"type": "string", "enum": [*DOMAIN_PRESETS, "custom"], "required": True},
        "vertices": {"type": "array", "items": _POINT, "minItems": 3, "nullable": True, "default": None},
        "h": {**_POSITIVE, "default": 0.05},
        "grading_corners": {"type": "array", "items": {"type": "integer", "minimum": 0}, "default": []},
        "grading_ratio": {**_POSITIVE, "maximum": 1, "default": 1.0},
        "require_nonobtuse": {"type": "boolean", "default": False},
        "refine": {"type": "integer", "minimum": 0, "default": 0},
        "mesh_file": {"type": "string", "nullable": True, "default": None},
    },
    "model": {
        "preset": {"type": "string", "enum": ["full", "classical", "custom"], "required": True},
        "coefficients": {"type": "string", "enum": list(COEFFICIENT_PRESETS), "default": "classical"},
        "chi": {**_NONNEGATIVE, "default": 1.0},
        "v_floor": {**_POSITIVE, "default": 1e-6},
        "kappa": {"type": "expression", "default": 1.0},
        "sigma": {"type": "expression", "default": 0.0},
        "kappa_floor": {**_POSITIVE, "default": 1e-6},
        "r1": {**_NONNEGATIVE, "default": 1.0},
        "r_neg1": {**_NONNEGATIVE, "default": 1.0},
        "r2": {**_NONNEGATIVE, "default": 1.0},
        "c_f": {**_NONNEGATIVE, "default": 1.0},
        "c_g": {**_NONNEGATIVE, "default": 0.0},
        "k": {**_NONNEGATIVE, "default": 1.0},
        "reaction_u": {"type": "expression", "default": 0.0},
        "reaction_v": {"type": "expression", "default": 0.0},
        "reaction_p": {"type": "expression", "default": 0.0},
        "reaction_w": {"type": "expression", "default": 0.0},
    },
    "diffusion": {
        "k_v": {**_POSITIVE, "default": 1.0},
        "k_p": {**_POSITIVE, "default": 1.0},
        "k_w": {**_POSITIVE, "default": 1.0},
    },
    "time": {
        "t_end": {**_NONNEGATIVE, "required": True},
        "tau0": {**_POSITIVE, "default": 1e-3},
        "tau_min": {**_POSITIVE, "default": 1e-8},
        "picard_iters": {"type": "integer", "minimum": 0, "default": 0},
        "picard_tol": {**_POSITIVE, "default": 1e-8},
        "blowup_linf": {**_POSITIVE, "default": 1e6},
        "solver_tol": {**_POSITIVE, "maximum": 1, "exclusiveMaximum": True, "default": 1e-10},
        "adapt": {"type": "string", "enum": [mode.value for mode in AdaptMode], "default": "halving"},
        "lumped_mass": {"type": "boolean", "default": True},
        "delta": {**_POSITIVE, "default": 1.0},
        "use_cutoff": {"type": "boolean", "default": True},
        "max_relative_change": {**_POSITIVE, "nullable": True, "default": None},
        "parallel_vpw": {"type": "boolean", "default": False},
    },
    **{f"initial.{species}": deepcopy(_INITIAL_SECTION) for species in SPECIES},
    "output": {
        "directory": {"type": "string", "default": "output"},
        "timeseries": {"type": "string", "default": "timeseries.csv"},
        "snapshot_prefix": {"type": "string", "default": "snapshot"},
        "snapshot_every": {"type": "integer", "minimum": 0, "default": 0},
    },
    "diagnostics": {
        "corner_vertex": {"type": "integer", "minimum": 0, "nullable": True, "default": None},
        "corner_radius": {**_POSITIVE, "default": 0.1},
    },
}


@dataclass(frozen=True)
class RunConfig:
    """
    A validated configuration: every section of CONFIG_SCHEMA, every key present, defaults applied.
    """

    values: dict[str, dict[str, Any]]
    path: Path | None = field(default=None, compare=False)

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.values[section]


@dataclass(frozen=True)
class InitialSpec:
    species: str
    kind: str = "constant"
    value: float = 0.0
    center: tuple[float, float] = (0.5, 0.5)
    width: float = 0.1
    amplitude: float = 1.0
    offset: float = 0.0
    path: str | None = None


def _suggest(name: str, options: list[str]) -> str:
    close_matches = difflib.get_close_matches(name, options)
    return CLOSE_MATCHES_HINT + "\n- ".join(close_matches) if close_matches else ""


def _parse_scalar(raw: str, line: int) -> Any:
    try:
        return yaml.safe_load(raw) if raw else None
    except yaml.YAMLError as e:
        raise ConfigurationError(YAML_VALUE_ERROR.format(received=raw), line) from e


def _read_sections(text: str) -> dict[str, dict[str, tuple[Any, int | None]]]:
    tree: dict[str, dict[str, tuple[Any, int | None]]] = {}
    section: str | None = None
    for number, raw_line in enumerate(text.splitlines(), start=1):
        content = raw_line.split("#", 1)[0].strip()
        if not content:
            continue
        if content.startswith("[") and content.endswith("]"):
            section = content[1:-1].strip()
            if section not in CONFIG_SCHEMA:
                message = UNKNOWN_SECTION_ERROR.format(section=section) + _suggest(section, list(CONFIG_SCHEMA))
                raise ConfigurationError(message, number)
            tree.setdefault(section, {})
            continue
        key, separator, raw_value = content.partition("=")
        key = key.strip()
        if not separator or not key:
            raise ConfigurationError(SYNTAX_ERROR.format(received=content), number)
        if section is None:
            raise ConfigurationError(KEY_OUTSIDE_SECTION_ERROR.format(key=key), number)
        if key in tree[section]:
            raise ConfigurationError(DUPLICATE_KEY_ERROR.format(key=key, section=section), number)
        tree[section][key] = (_parse_scalar(raw_value.strip(), number), number)
    return tree


def _read_structured(data: Any) -> dict[str, dict[str, tuple[Any, int | None]]]:
    if not isinstance(data, dict):
        raise ConfigurationError(SECTION_TYPE_ERROR.format(section="<root>"))
    tree: dict[str, dict[str, tuple[Any, int | None]]] = {}
    for section, keys in data.items():
        section = str(section)
        if section not in CONFIG_SCHEMA:
            message = UNKNOWN_SECTION_ERROR.format(section=section) + _suggest(section, list(CONFIG_SCHEMA))
            raise ConfigurationError(message)
        if not isinstance(keys, dict):
            raise ConfigurationError(SECTION_TYPE_ERROR.format(section=section))
        tree[section] = {str(key): (value, None) for key, value in keys.items()}
    return tree


def _coerce(schema: dict[str, Any], value: Any) -> Any:
    """
    YAML 1.1 reads ``1e-3`` as a string and ``5`` as an int; numbers are normalised to float.
    """
    if schema["type"] == "number":
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                return value
        if isinstance(value, int) and not isinstance(value, bool):
            return float(value)
    if schema["type"] == "array" and isinstance(value, list) and "items" in schema:
        return [_coerce(schema["items"], item) for item in value]
    return value


def _validate_tree(tree: dict[str, dict[str, tuple[Any, int | None]]]) -> dict[str, dict[str, Any]]:
    values: dict[str, dict[str, Any]] = {}
    for section, schema in CONFIG_SCHEMA.items():
        given = tree.get(section, {})
        for key, (_, line) in given.items():
            if key not in schema:
                message = UNKNOWN_KEY_ERROR.format(key=key, section=section) + _suggest(key, list(schema))
                raise ConfigurationError(message, line)
        values[section] = {}
        for key, key_schema in schema.items():
            if key not in given:
                if key_schema.get("required"):
                    raise ConfigurationError(MISSING_KEY_ERROR.format(key=key, section=section))
                values[section][key] = deepcopy(key_schema["default"])
                continue
            value, line = given[key]
            value = _coerce(key_schema, value)
            error = validate_value(key_schema, value)
            if error:
                raise ConfigurationError(VALUE_ERROR.format(key=key, section=section, message=error), line)
            values[section][key] = value
    return values


def _check_dependencies(config: RunConfig) -> None:
    domain = config["domain"]
    if domain["preset"] == "custom" and domain["vertices"] is None:
        raise ConfigurationError(
            DEPENDENT_KEY_ERROR.format(key="vertices", section="domain", condition="preset = custom")
        )
    for species in SPECIES:
        section = f"initial.{species}"
        if config[section]["kind"] == "nodal_file" and not config[section]["path"]:
            raise ConfigurationError(
                DEPENDENT_KEY_ERROR.format(key="path", section=section, condition="kind = nodal_file")
            )
    domain_vertices = build_domain(config).vertices
    corner_vertex = config["diagnostics"]["corner_vertex"]
    if corner_vertex is not None and corner_vertex >= len(domain_vertices):
        raise ConfigurationError(CORNER_VERTEX_ERROR.format(index=corner_vertex, count=len(domain_vertices)))
    build_coefficients(config)
    build_network(config)
    build_step_config(config)


def config_from_dict(data: dict[str, Any], path: Path | None = None) -> RunConfig:
    config = RunConfig(_validate_tree(_read_structured(data)), path)
    _check_dependencies(config)
    return config


def parse_config(path: str | Path) -> RunConfig:
    """
    Read and validate a configuration file, applying defaults.

    :raises: ConfigurationError naming the key (and line, for the native format) of the first problem
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    suffix = path.suffix.lower()
    if suffix in (".json", ".yaml", ".yml"):
        try:
            data = json.loads(text) if suffix == ".json" else yaml.safe_load(text) or {}
        except (json.JSONDecodeError, yaml.YAMLError) as e:
            raise ConfigurationError(DECODE_ERROR.format(path=path, reason=e)) from e
        return config_from_dict(data, path)
    if suffix not in ("", ".cfg", ".ini", ".conf", ".txt"):
        raise ConfigurationError(UNSUPPORTED_FORMAT_ERROR.format(path=path))
    config = RunConfig(_validate_tree(_read_sections(text)), path)
    _check_dependencies(config)
    logger.debug("Parsed configuration %s", path)
    return config


def _emit_value(value: Any) -> str:
    text = yaml.safe_dump(value, default_flow_style=True, width=float("inf")).strip()
    if text.endswith("..."):
        text = text[:-3].strip()
    return text


def dump_config(config: RunConfig) -> str:
    """
    Emit every section and key in schema order; parse_config reads the result back to an equal RunConfig.
    """
    blocks = []
    for section, keys in config.values.items():
        lines = [f"[{section}]"]
        lines.extend(f"{key} = {_emit_value(value)}" for key, value in keys.items())
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def build_domain(config: RunConfig) -> PolygonalDomain:
    domain = config["domain"]
    return make_domain(domain["preset"], domain["vertices"])


def build_mesh(config: RunConfig, domain: PolygonalDomain | None = None) -> TriMesh:
    settings = config["domain"]
    if settings["mesh_file"]:
        mesh = load_mesh(settings["mesh_file"])
    else:
        domain = domain or build_domain(config)
        grading = None
        if settings["grading_corners"]:
            grading = Grading(tuple(settings["grading_corners"]), settings["grading_ratio"])
        mesh = triangulate(domain, settings["h"], grading, settings["require_nonobtuse"])
    for _ in range(settings["refine"]):
        mesh = refine_uniform(mesh)
    return mesh


def _expression(value: Any, variables: tuple[str, ...]) -> Any:
    return Expression(value, variables) if isinstance(value, str) else float(value)


def build_coefficients(config: RunConfig) -> CoefficientPair:
    model = config["model"]
    name = model["coefficients"]
    if name == "classical":
        return coefficient_preset(name, chi=model["chi"], kappa_floor=model["kappa_floor"])
    if name == "logarithmic":
        return coefficient_preset(name, chi=model["chi"], v_floor=model["v_floor"], kappa_floor=model["kappa_floor"])
    kappa = _expression(model["kappa"], ("u", "v"))
    if name == "pure_diffusion":
        if not isinstance(kappa, float):
            raise ConfigurationError(VALUE_ERROR.format(key="kappa", section="model", message="expected a number"))
        return coefficient_preset(name, kappa=kappa, kappa_floor=model["kappa_floor"])
    sigma = _expression(model["sigma"], ("u", "v"))
    return coefficient_preset(name, kappa=kappa, sigma=sigma, kappa_floor=model["kappa_floor"])


def build_network(config: RunConfig) -> ReactionNetwork:
    """
    The network without cut-off; the run attaches the clamp computed from the initial data.
    """
    model = config["model"]
    if model["preset"] == "full":
        params = KineticParams(model["r1"], model["r_neg1"], model["r2"], model["c_f"], model["c_g"])
        return ReactionNetwork.full_keller_segel(params)
    if model["preset"] == "classical":
        return ReactionNetwork.simplified(model["k"], model["c_f"])
    variables = ("u", "v", "p", "w")
    return ReactionNetwork.custom([_expression(model[f"reaction_{species}"], variables) for species in SPECIES])


def build_step_config(config: RunConfig) -> StepConfig:
    time, diffusion = config["time"], config["diffusion"]
    return StepConfig(
        tau0=time["tau0"],
        tau_min=time["tau_min"],
        t_end=time["t_end"],
        picard_iters=time["picard_iters"],
        picard_tol=time["picard_tol"],
        blowup_linf=time["blowup_linf"],
        k_v=diffusion["k_v"],
        k_p=diffusion["k_p"],
        k_w=diffusion["k_w"],
        solver_tol=time["solver_tol"],
        adapt=AdaptMode(time["adapt"]),
        lumped_mass=time["lumped_mass"],
        delta=time["delta"],
        use_cutoff=time["use_cutoff"],
        max_relative_change=time["max_relative_change"],
        parallel_vpw=time["parallel_vpw"],
    )


def initial_specs(config: RunConfig) -> dict[str, InitialSpec]:
    specs = {}
    for species in SPECIES:
        section = dict(config[f"initial.{species}"])
        section["center"] = tuple(section["center"])
        specs[species] = InitialSpec(species=species, **section)
    return specs


def _read_nodal_file(spec: InitialSpec, mesh: TriMesh) -> np.ndarray:
    path = Path(str(spec.path))
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InitialConditionError(INITIAL_READ_ERROR.format(path=path, reason=e)) from e
    if text.lstrip().startswith("t="):
        _, table = read_snapshot(path)
        if spec.species not in SPECIES:
            raise InitialConditionError(INITIAL_COLUMN_ERROR.format(path=path, field=spec.species))
        values = table[:, 2 + SPECIES.index(spec.species)]
    else:
        try:
            values = np.array(
                [float(line.split("#", 1)[0]) for line in text.splitlines() if line.split("#", 1)[0].strip()]
            )
        except ValueError as e:
            raise InitialConditionError(INITIAL_FORMAT_ERROR.format(path=path)) from e
    if len(values) != mesh.num_nodes:
        raise InitialConditionError(
            INITIAL_LENGTH_ERROR.format(path=path, received=len(values), expected=mesh.num_nodes)
        )
    return values


def initial_condition(spec: InitialSpec, mesh: TriMesh) -> ScalarField:
    """
    constant(c), gaussian_bump: offset + amplitude * exp(-|x - center|^2 / width^2), or nodal_file(path).
    """
    if spec.kind == "constant":
        return ScalarField.on(mesh, spec.value)
    if spec.kind == "gaussian_bump":
        squared = np.sum((mesh.nodes - np.asarray(spec.center, dtype=float)) ** 2, axis=1)
        return ScalarField.on(mesh, spec.offset + spec.amplitude * np.exp(-squared / spec.width**2))
    if spec.kind == "nodal_file":
        return ScalarField.on(mesh, _read_nodal_file(spec, mesh))
    raise InitialConditionError(INITIAL_KIND_ERROR.format(kind=spec.kind))


def initial_state(config: RunConfig, mesh: TriMesh) -> SimState:
    specs = initial_specs(config)
    return SimState(0.0, *(initial_condition(specs[species], mesh) for species in SPECIES))
