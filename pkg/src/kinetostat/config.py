"""Model configuration files: parsing, validation, instantiation.

A model file is JSON (conventionally ``.cfg``). It either names a
bundled architecture with its parameter block, or lists generic chains
element by element; 6x6 matrices are inline row-major arrays or
references to compliance files (whitespace text table or JSON). The
shape of the document is validated against the published schema in
``data/model-config.schema.json``, then each element is constructed with
its own invariant checks.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .beams import BeamSegment, beam_compliance, load_compliance_matrix
from .chain import (
    ActuatedJoint,
    ChainState,
    KinematicChain,
    ParallelogramLink,
    PassiveJoint,
    RigidLink,
    VirtualSpring6,
    rigid_full_configuration,
    rigid_nominal_configuration,
)
from .errors import ComplianceMatrixError, KinetostatError, ModelConfigError
from .geometry import Transform
from .models import (
    OrthoglideParams,
    build_orthoglide_prpar,
    build_orthoglide_puu,
    prpar_passive_nominal,
    puu_passive_nominal,
)
from .statics import SolverOptions

__all__ = ["ModelConfig", "GridSpec", "load_model", "bundled_model_path"]

_ARCHITECTURES = ("orthoglide-puu", "orthoglide-prpar", "chains")


def bundled_model_path(name: str) -> Path:
    """Filesystem path of a model file shipped with the package."""
    return Path(resources.files("kinetostat").joinpath("data", name))


def _schema():
    with resources.files("kinetostat").joinpath(
            "data", "model-config.schema.json").open("rb") as fh:
        return json.load(fh)


def _check_schema(doc) -> None:
    import jsonschema

    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "$" + "".join(
            f"[{p}]" if isinstance(p, int) else f".{p}" for p in e.absolute_path
        )
        raise ModelConfigError(f"{where}: {e.message}")


def _matrix6(raw, where: str) -> np.ndarray:
    m = np.asarray(raw, dtype=float)
    if m.shape != (6, 6):
        raise ModelConfigError(f"{where}: expected a 6x6 matrix, got shape {m.shape}")
    return m


def _read_compliance_file(path: Path, where: str):
    if not path.exists():
        raise ModelConfigError(f"{where}: compliance file not found: {path}")
    try:
        if path.suffix.lower() == ".json":
            with path.open("rb") as fh:
                doc = json.load(fh)
            raw = doc["compliance"] if isinstance(doc, dict) else doc
        else:
            raw = np.loadtxt(path)
        return load_compliance_matrix(raw)
    except ComplianceMatrixError as exc:
        raise ModelConfigError(f"{where}: {path}: {exc}") from exc
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise ModelConfigError(f"{where}: cannot read {path}: {exc}") from exc


def _beam(raw, where: str) -> BeamSegment:
    try:
        return BeamSegment(
            length=float(raw["length"]),
            elastic_modulus=float(raw["elastic_modulus"]),
            shear_modulus=float(raw["shear_modulus"]),
            area=float(raw["area"]),
            I_y=float(raw["I_y"]),
            I_z=float(raw["I_z"]),
            J_torsion=float(raw["J_torsion"]),
        )
    except KinetostatError as exc:
        raise ModelConfigError(f"{where}: {exc}") from exc


def _spring(raw, base_dir: Path, where: str) -> VirtualSpring6:
    sources = [k for k in ("stiffness", "compliance", "compliance_file", "beam") if k in raw]
    if len(sources) != 1:
        raise ModelConfigError(
            f"{where}: a spring needs exactly one of stiffness, compliance, "
            f"compliance_file or beam (got {sources or 'none'})")
    src = sources[0]
    try:
        if src == "stiffness":
            return VirtualSpring6(_matrix6(raw["stiffness"], where))
        if src == "compliance":
            return VirtualSpring6(load_compliance_matrix(
                _matrix6(raw["compliance"], where)).stiffness())
        if src == "compliance_file":
            c = _read_compliance_file(base_dir / raw["compliance_file"], where)
            return VirtualSpring6(c.stiffness())
        return VirtualSpring6(beam_compliance(_beam(raw["beam"], where)).stiffness())
    except (KinetostatError, ComplianceMatrixError) as exc:
        if isinstance(exc, ModelConfigError):
            raise
        raise ModelConfigError(f"{where}: {exc}") from exc


def _transform(raw, where: str) -> Transform:
    rot = np.asarray(raw.get("rotation", np.eye(3)), dtype=float)
    tr = np.asarray(raw.get("translation", np.zeros(3)), dtype=float)
    try:
        return Transform(rot, tr)
    except KinetostatError as exc:
        raise ModelConfigError(f"{where}: {exc}") from exc


def _element(raw, base_dir: Path, where: str):
    kind = raw["type"]
    try:
        if kind == "rigid":
            return RigidLink(_transform(raw, where))
        if kind == "actuated":
            return ActuatedJoint(raw["kind"], raw["axis"], float(raw["nominal"]),
                                 float(raw["control_stiffness"]))
        if kind == "passive":
            return PassiveJoint(raw["kind"], raw["axis"])
        if kind == "parallelogram":
            return ParallelogramLink(raw["axis"], float(raw["length"]))
        if kind == "spring":
            return _spring(raw, base_dir, where)
    except KinetostatError as exc:
        if isinstance(exc, ModelConfigError):
            raise
        raise ModelConfigError(f"{where}: {exc}") from exc
    raise ModelConfigError(f"{where}: unknown element type {kind!r}")


def _orthoglide_params(raw, where: str) -> OrthoglideParams:
    kwargs = {}
    for key in ("leg_length", "rail_offset", "actuator_stiffness",
                "foot_offset", "parallelogram_separation"):
        if key in raw:
            kwargs[key] = float(raw[key])
    for key in ("bar", "foot"):
        if key in raw:
            kwargs[key] = _beam(raw[key], f"{where}.{key}")
    if "reference_points" in raw:
        kwargs["reference_points"] = {
            str(k): tuple(float(x) for x in v) for k, v in raw["reference_points"].items()
        }
    try:
        return OrthoglideParams(**kwargs)
    except KinetostatError as exc:
        raise ModelConfigError(f"{where}: {exc}") from exc


def _solver(raw) -> SolverOptions:
    try:
        return SolverOptions(
            translational_tol=float(raw.get("translational_tol", 1e-6)),
            rotational_tol=float(raw.get("rotational_tol", 1e-9)),
            statics_tol=float(raw.get("statics_tol", 1e-6)),
            max_iterations=int(raw.get("max_iterations", 50)),
        )
    except KinetostatError as exc:
        raise ModelConfigError(f"$.solver: {exc}") from exc


@dataclass(frozen=True)
class GridSpec:
    """Rectangular evaluation grid; counts of 1 pin an axis at its minimum."""

    x: tuple  # (min, max, count)
    y: tuple
    z: tuple

    def __post_init__(self):
        for name, (lo, hi, count) in zip("xyz", (self.x, self.y, self.z)):
            if count < 1 or int(count) != count:
                raise KinetostatError(f"grid {name}: count must be a positive integer")
            if lo > hi:
                raise KinetostatError(f"grid {name}: min {lo} exceeds max {hi}")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """Parse 'XMIN:XMAX:NX,YMIN:YMAX:NY,ZMIN:ZMAX:NZ'."""
        parts = text.split(",")
        if len(parts) != 3:
            raise KinetostatError("grid needs three comma-separated axis ranges")
        axes = []
        for part in parts:
            bits = part.split(":")
            if len(bits) != 3:
                raise KinetostatError(f"grid axis {part!r} is not MIN:MAX:N")
            axes.append((float(bits[0]), float(bits[1]), int(bits[2])))
        return cls(*axes)

    @property
    def point_count(self) -> int:
        return self.x[2] * self.y[2] * self.z[2]

    def points(self):
        """Grid points in row order: x outermost, z innermost."""
        xs = np.linspace(self.x[0], self.x[1], self.x[2])
        ys = np.linspace(self.y[0], self.y[1], self.y[2])
        zs = np.linspace(self.z[0], self.z[1], self.z[2])
        for x, y, z in itertools.product(xs, ys, zs):
            yield np.array([x, y, z])


@dataclass(frozen=True)
class ModelConfig:
    """A parsed, validated manipulator model."""

    name: str
    architecture: str
    params: OrthoglideParams | None = None
    chain_templates: tuple = ()
    reference_points: dict = field(default_factory=dict)
    solver: SolverOptions = SolverOptions()

    def chain_count(self) -> int:
        return 3 if self.architecture != "chains" else len(self.chain_templates)

    def instantiate(self, point):
        """Chains posed at a workspace point.

        Returns (chains, passive nominals, unloaded platform pose). For
        the bundled architectures the actuator nominals come from the
        closed-form loop closure and the passive coordinates are refined
        by the rigid inverse kinematics; generic chains are retargeted by
        the full rigid inverse kinematics over actuated plus passive
        coordinates.
        """
        point = np.asarray(point, dtype=float)
        pose = Transform(np.eye(3), point)
        if self.architecture == "orthoglide-puu":
            chains = build_orthoglide_puu(self.params, point)
            guesses = puu_passive_nominal(self.params, point)
        elif self.architecture == "orthoglide-prpar":
            chains = build_orthoglide_prpar(self.params, point)
            guesses = prpar_passive_nominal(self.params, point)
        else:
            chains, nominals = [], []
            for template in self.chain_templates:
                c, st = rigid_full_configuration(template, pose)
                chains.append(c)
                nominals.append(st.q)
            return chains, nominals, pose
        nominals = [
            rigid_nominal_configuration(c, pose, ChainState(g, np.zeros(c.n_virtual))).q
            for c, g in zip(chains, guesses)
        ]
        return chains, nominals, pose

    def describe(self) -> list:
        """Per-chain structure summary lines for the validation report."""
        if self.architecture == "chains":
            chains = self.chain_templates
        else:
            chains = build_orthoglide_puu(self.params, (0, 0, 0)) \
                if self.architecture == "orthoglide-puu" \
                else build_orthoglide_prpar(self.params, (0, 0, 0))
        return [
            f"chain {i}: {len(c.elements)} elements, "
            f"n={c.n_passive} passive, m={c.n_virtual} elastic"
            for i, c in enumerate(chains)
        ]


def load_model(path) -> ModelConfig:
    """Parse and validate a model file; raises ModelConfigError."""
    path = Path(path)
    if not path.exists():
        raise ModelConfigError(f"model file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ModelConfigError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    _check_schema(doc)

    arch = doc["architecture"]
    solver = _solver(doc.get("solver", {}))
    if arch in ("orthoglide-puu", "orthoglide-prpar"):
        params = _orthoglide_params(doc.get("parameters", {}), "$.parameters")
        if arch == "orthoglide-prpar" and params.parallelogram_separation <= 0:
            raise ModelConfigError(
                "$.parameters.parallelogram_separation: must be positive "
                "for the parallelogram architecture")
        return ModelConfig(doc["name"], arch, params=params,
                           reference_points=dict(params.reference_points),
                           solver=solver)

    templates = []
    for i, chain_doc in enumerate(doc["chains"]):
        elements = [
            _element(e, path.parent, f"$.chains[{i}].elements[{j}]")
            for j, e in enumerate(chain_doc["elements"])
        ]
        try:
            templates.append(KinematicChain(elements))
        except KinetostatError as exc:
            raise ModelConfigError(f"$.chains[{i}]: {exc}") from exc
    if not templates:
        raise ModelConfigError("$.chains: at least one chain is required")
    refs = {str(k): tuple(float(x) for x in v)
            for k, v in doc.get("reference_points", {}).items()}
    return ModelConfig(doc["name"], arch, chain_templates=tuple(templates),
                       reference_points=refs, solver=solver)
