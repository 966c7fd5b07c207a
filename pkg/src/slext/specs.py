"""Extension specifications: separated ``(alpha, beta)`` or coupled ``(eta, R)``.

Separated conditions read ``g~(a) cos(alpha) + g~'(a) sin(alpha) = 0`` and
``g~(b) cos(beta) - g~'(b) sin(beta) = 0`` with ``alpha, beta in (0, pi]``;
``pi`` is the Dirichlet-type (Friedrichs) choice. Coupled conditions read
``(g~(b), g~'(b)) = e^{i eta} R (g~(a), g~'(a))`` with ``R`` in ``SL(2, R)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DetNotOne, SpecParseError

PI = math.pi


def _angle(value, name: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise SpecParseError(f"{name} must be a number, got {value!r}") from None
    if not (0.0 < v <= PI + 1e-12):
        raise SpecParseError(f"{name}={v!r} is outside (0, pi]")
    return min(v, PI)


@dataclass(frozen=True)
class Separated:
    alpha: float
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _angle(self.alpha, "alpha"))
        object.__setattr__(self, "beta", _angle(self.beta, "beta"))

    def to_dict(self):
        return {"type": "separated", "alpha": self.alpha, "beta": self.beta}

    def __str__(self):
        return f"Separated(alpha={self.alpha:.12g}, beta={self.beta:.12g})"


@dataclass(frozen=True)
class Coupled:
    eta: float
    R: tuple

    def __post_init__(self):
        try:
            eta = float(self.eta)
            R = np.asarray(self.R, dtype=float)
        except (TypeError, ValueError):
            raise SpecParseError("coupled spec needs a number eta and a 2x2 real R") from None
        if R.shape != (2, 2) or not np.all(np.isfinite(R)):
            raise SpecParseError("R must be a finite 2x2 matrix")
        if not (0.0 <= eta < PI):
            raise SpecParseError(f"eta={eta!r} is outside [0, pi)")
        det = R[0, 0] * R[1, 1] - R[0, 1] * R[1, 0]
        if abs(det - 1.0) > 1e-9:
            raise DetNotOne(f"det R = {det:.12g}, expected 1")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "R", tuple(tuple(float(v) for v in row) for row in R))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.R, dtype=float)

    def to_dict(self):
        return {"type": "coupled", "eta": self.eta, "R": [list(r) for r in self.R]}

    def __str__(self):
        (a, b), (c, d) = self.R
        return f"Coupled(eta={self.eta:.12g}, R=[[{a:.12g}, {b:.12g}], [{c:.12g}, {d:.12g}]])"


ExtensionSpec = Separated | Coupled


def parse_spec(data) -> Separated | Coupled:
    """Build a spec from its wire form (a mapping or a JSON string).

    >>> parse_spec('{"type": "separated", "alpha": 3.14159, "beta": 1.5}').beta
    1.5
    """
    if isinstance(data, (Separated, Coupled)):
        return data
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SpecParseError(f"spec is not valid JSON: {exc.msg} at position {exc.pos}") from None
    if not isinstance(data, dict):
        raise SpecParseError("spec must be a JSON object")
    kind = str(data.get("type", "")).lower()
    if kind == "separated":
        for k in ("alpha", "beta"):
            if k not in data:
                raise SpecParseError(f"separated spec lacks {k!r}")
        return Separated(data["alpha"], data["beta"])
    if kind == "coupled":
        if "R" not in data:
            raise SpecParseError("coupled spec lacks 'R'")
        return Coupled(data.get("eta", 0.0), data["R"])
    raise SpecParseError(f"unknown spec type {data.get('type')!r} (use 'separated' or 'coupled')")


def spec_to_dict(spec) -> dict:
    return spec.to_dict()


def arccot(x: float) -> float:
    """Inverse cotangent with values in ``(0, pi)``."""
    return 0.5 * PI - math.atan(x)
