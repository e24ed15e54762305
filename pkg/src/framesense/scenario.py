"""Sensing-scenario model: sensors, readings, factorization, and health space.

A scenario holds N sensors observing M parameters at K times.  Sensor j can
hear the parameters in its covering set T_j and bears primary responsibility
for the partition set S_j.  Readings factor (when the scenario is
pre-separable) into a per-sensor sensitivity profile and a per-time volume
profile, and a health map carries everything into a low-dimensional space
C^n where the same factorization persists.  The predicates at the bottom
(radiative, dominant, harmonious, operational) quantify which coordinates
are being emitted, heard, and shared between sensors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .frames import DEFAULT_TOL, parse_complex


class NotPreSeparableError(ValueError):
    """Readings fail the rank-1 factorization test at one or more parameters."""

    def __init__(self, offending):
        self.offending = tuple(int(f) for f in offending)
        super().__init__(
            f"readings have rank > 1 at parameter indices {list(self.offending)}"
        )


class NotSeparableError(ValueError):
    """No supported health-map route carries the factorization into C^n."""


class UncoverableIndexError(ValueError):
    """Some health coordinate is heard by no sensor at any time."""

    def __init__(self, indices):
        self.indices = tuple(int(i) for i in indices)
        super().__init__(
            f"health coordinates {list(self.indices)} are silent for every "
            "sensor; reduce the health space by dropping them"
        )


@dataclass(frozen=True)
class HealthMap:
    """Deterministic map C^M -> C^n with H(0) = 0.

    kind = "selection_matrix": rows are scaled rows of the identity, given as
    ``rows[i] = (f_i, scale_i)`` meaning output i reads ``scale_i * v[f_i]``.
    kind = "general_linear": an explicit n-by-M matrix.
    kind = "opaque": a caller-supplied callable (must satisfy H(0) = 0).
    """

    n: int
    kind: str
    rows: tuple | None = None
    matrix: np.ndarray | None = None
    func: Callable | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("health dimension must be positive")
        if self.kind == "selection_matrix":
            if self.rows is None or len(self.rows) != self.n:
                raise ValueError("selection map needs one (f, scale) row per output")
            rows = tuple((int(f), complex(s)) for f, s in self.rows)
            if any(s == 0 for _, s in rows):
                raise ValueError("selection scales must be nonzero")
            object.__setattr__(self, "rows", rows)
        elif self.kind == "general_linear":
            m = np.asarray(self.matrix, dtype=np.complex128)
            if m.shape[0] != self.n:
                raise ValueError("matrix row count must equal health dimension")
            object.__setattr__(self, "matrix", m)
        elif self.kind == "opaque":
            if self.func is None:
                raise ValueError("opaque map needs a callable")
        else:
            raise ValueError(f"unknown health map kind {self.kind!r}")

    @classmethod
    def selection(cls, n, rows) -> "HealthMap":
        return cls(n=n, kind="selection_matrix", rows=tuple(rows))

    @classmethod
    def identity(cls, n) -> "HealthMap":
        return cls.selection(n, [(f, 1.0) for f in range(n)])

    @classmethod
    def linear(cls, matrix) -> "HealthMap":
        matrix = np.asarray(matrix, dtype=np.complex128)
        return cls(n=matrix.shape[0], kind="general_linear", matrix=matrix)

    @classmethod
    def opaque(cls, n, func) -> "HealthMap":
        zero_image = np.asarray(func(np.zeros(1024, dtype=np.complex128)))
        if not np.allclose(zero_image, 0.0):
            raise ValueError("health map must send 0 to 0")
        return cls(n=n, kind="opaque", func=func)

    def apply(self, v) -> np.ndarray:
        """Image of one vector; also accepts stacked (..., M) arrays."""
        v = np.asarray(v, dtype=np.complex128)
        if self.kind == "selection_matrix":
            f_idx = np.array([f for f, _ in self.rows])
            scales = np.array([s for _, s in self.rows])
            return v[..., f_idx] * scales
        if self.kind == "general_linear":
            return v @ self.matrix.T
        if v.ndim == 1:
            return np.asarray(self.func(v), dtype=np.complex128)
        out = np.empty(v.shape[:-1] + (self.n,), dtype=np.complex128)
        for idx in np.ndindex(v.shape[:-1]):
            out[idx] = self.func(v[idx])
        return out


@dataclass(frozen=True)
class Scenario:
    """Parameters, sensors, times, covering/partition, readings, health map.

    ``readings[j, k, f]`` is sensor j's value for parameter f at time k; it
    must vanish outside the sensor's covering set T_j.
    """

    covering: tuple
    partition: tuple
    readings: np.ndarray
    health: HealthMap

    def __post_init__(self):
        r = np.asarray(self.readings, dtype=np.complex128)
        if r.ndim != 3:
            raise ValueError("readings must have shape (N, K, M)")
        object.__setattr__(self, "readings", r)
        object.__setattr__(
            self, "covering", tuple(frozenset(int(f) for f in t) for t in self.covering)
        )
        object.__setattr__(
            self, "partition", tuple(frozenset(int(f) for f in s) for s in self.partition)
        )
        if len(self.covering) != r.shape[0] or len(self.partition) != r.shape[0]:
            raise ValueError("need one covering and one partition set per sensor")

    @property
    def N(self) -> int:
        return self.readings.shape[0]

    @property
    def K(self) -> int:
        return self.readings.shape[1]

    @property
    def M(self) -> int:
        return self.readings.shape[2]

    @property
    def n(self) -> int:
        return self.health.n

    def health_images(self) -> np.ndarray:
        """All H(v_jk) as an (N, K, n) array."""
        return self.health.apply(self.readings)

    @classmethod
    def from_factors(
        cls, gamma_hat, alpha_hat, health, covering=None, partition=None
    ) -> "Scenario":
        """Build readings as the outer products gamma_hat[j] * alpha_hat[k]."""
        g = np.asarray(gamma_hat, dtype=np.complex128)
        a = np.asarray(alpha_hat, dtype=np.complex128)
        if g.ndim != 2 or a.ndim != 2 or g.shape[1] != a.shape[1]:
            raise ValueError("factor arrays must be (N, M) and (K, M)")
        n_sensors, m = g.shape
        readings = g[:, None, :] * a[None, :, :]
        if covering is None:
            covering = [range(m)] * n_sensors
        if partition is None:
            partition = [range(j, m, n_sensors) for j in range(n_sensors)]
        return cls(tuple(covering), tuple(partition), readings, health)


@dataclass(frozen=True)
class Factorization:
    """Sensitivity/volume factors realizing separability.

    ``gamma_hat`` (N, M) and ``alpha_hat`` (K, M) factor the raw readings;
    ``gamma`` (N, n) and ``alpha`` (K, n) factor the health images once
    :func:`separate` has filled them in.
    """

    gamma_hat: np.ndarray
    alpha_hat: np.ndarray
    gamma: np.ndarray | None = None
    alpha: np.ndarray | None = None

    def __post_init__(self):
        for name in ("gamma_hat", "alpha_hat", "gamma", "alpha"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, np.asarray(val, dtype=np.complex128))

    @property
    def separated(self) -> bool:
        return self.gamma is not None and self.alpha is not None

    def images(self) -> np.ndarray:
        """Health images gamma_j(i) * alpha_k(i) as an (N, K, n) array."""
        if not self.separated:
            raise ValueError("health-space factors not filled in; run separate()")
        return self.gamma[:, None, :] * self.alpha[None, :, :]

    @classmethod
    def from_health_factors(cls, gamma, alpha) -> "Factorization":
        """Factorization given directly in health space (identity raw factors)."""
        gamma = np.asarray(gamma, dtype=np.complex128)
        alpha = np.asarray(alpha, dtype=np.complex128)
        return cls(gamma_hat=gamma, alpha_hat=alpha, gamma=gamma, alpha=alpha)


@dataclass(frozen=True)
class IndexAssignment:
    """Covering sets J_j and the responsibility partition I_j of {0..n-1}."""

    J: tuple
    I: tuple

    def __post_init__(self):
        object.__setattr__(self, "J", tuple(frozenset(j) for j in self.J))
        object.__setattr__(
            self, "I", tuple(tuple(sorted(int(i) for i in s)) for s in self.I)
        )
        seen = [i for s in self.I for i in s]
        if len(seen) != len(set(seen)):
            raise ValueError("responsibility sets I_j must be disjoint")
        if set(seen) != set(range(len(seen))):
            raise ValueError("responsibility sets must partition 0..n-1")
        for j, owned in enumerate(self.I):
            if not set(owned) <= self.J[j]:
                raise ValueError(f"I_{j} is not contained in J_{j}")

    @property
    def n(self) -> int:
        return sum(len(s) for s in self.I)

    @property
    def n_j(self) -> tuple:
        return tuple(len(s) for s in self.I)

    def owner(self, i: int) -> int:
        for j, owned in enumerate(self.I):
            if i in owned:
                return j
        raise KeyError(f"coordinate {i} is unassigned")

    def owners(self) -> np.ndarray:
        out = np.full(self.n, -1, dtype=int)
        for j, owned in enumerate(self.I):
            for i in owned:
                out[i] = j
        return out


@dataclass
class ValidityReport:
    ok: bool
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def validate_scenario(s: Scenario, tol: float = DEFAULT_TOL) -> ValidityReport:
    """Check the structural invariants; violations are data, not exceptions."""
    violations = []
    all_params = set(range(s.M))
    covered = set().union(*s.covering) if s.covering else set()
    if covered != all_params:
        missing = sorted(all_params - covered)
        violations.append(f"covering misses parameters {missing}")
    for j in range(s.N):
        for l in range(j + 1, s.N):
            overlap = s.partition[j] & s.partition[l]
            if overlap:
                violations.append(
                    f"partition sets S_{j} and S_{l} overlap at {sorted(overlap)}"
                )
    partitioned = set().union(*s.partition) if s.partition else set()
    if partitioned != all_params:
        missing = sorted(all_params - partitioned)
        violations.append(f"partition misses parameters {missing}")
    for j in range(s.N):
        stray = s.partition[j] - s.covering[j]
        if stray:
            violations.append(f"S_{j} is not contained in T_{j} (extra {sorted(stray)})")
    for j in range(s.N):
        outside = sorted(all_params - s.covering[j])
        if not outside:
            continue
        block = np.abs(s.readings[j][:, outside])
        if np.any(block > tol):
            ks, fs = np.nonzero(block > tol)
            k, f = int(ks[0]), outside[int(fs[0])]
            violations.append(
                f"sensor {j} reports parameter {f} outside its covering "
                f"(first at time {k})"
            )
    return ValidityReport(ok=not violations, violations=violations)


def factor_readings(s: Scenario, tol: float = DEFAULT_TOL) -> Factorization:
    """Extract rank-1 factors of the readings at every parameter.

    At each parameter f the N-by-K matrix of readings must have numerical
    rank at most one; otherwise :class:`NotPreSeparableError` lists the
    offending parameters.  The per-parameter gauge is fixed so that the
    loudest sensor's factor is real and nonnegative.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    scale = max(1.0, float(np.max(np.abs(s.readings)))) if s.readings.size else 1.0
    gamma_hat = np.zeros((s.N, s.M), dtype=np.complex128)
    alpha_hat = np.zeros((s.K, s.M), dtype=np.complex128)
    offending = []
    for f in range(s.M):
        vf = s.readings[:, :, f]
        u, sv, vh = np.linalg.svd(vf)
        if sv[0] <= tol * scale:
            continue  # silent parameter: both factors stay zero
        if sv.shape[0] > 1 and sv[1] > tol * sv[0]:
            offending.append(f)
            continue
        top = int(np.argmax(np.abs(u[:, 0])))
        phase = np.conj(u[top, 0]) / np.abs(u[top, 0])
        root = np.sqrt(sv[0])
        gamma_hat[:, f] = root * u[:, 0] * phase
        alpha_hat[:, f] = root * vh[0, :] * np.conj(phase)
    if offending:
        raise NotPreSeparableError(offending)
    return Factorization(gamma_hat=gamma_hat, alpha_hat=alpha_hat)


def volume_factors_constant(fac: Factorization, tol: float = DEFAULT_TOL) -> bool:
    """True iff each time's volume factor is constant across parameters.

    When this holds, any linear health map yields a separable scenario with
    gamma_j = A @ gamma_hat_j and a parameter-independent alpha_k.
    """
    a = fac.alpha_hat
    spread = np.max(np.abs(a - a.mean(axis=1, keepdims=True)), axis=1)
    limit = tol * np.maximum(1.0, np.max(np.abs(a), axis=1))
    return bool(np.all(spread <= limit))


def constant_volume_regauge(
    fac: Factorization, tol: float = DEFAULT_TOL
) -> Factorization | None:
    """Rewrite the factors so the volume factor is parameter-independent.

    The split of each reading into sensitivity and volume carries a free
    per-parameter scalar, so constancy across parameters is a property of
    one particular split.  A constant-volume split exists exactly when the
    per-parameter volume columns are parallel; this absorbs the
    per-parameter scale into the sensitivities and returns the rewritten
    factorization, or None when no such split exists.
    """
    a = fac.alpha_hat  # (K, M)
    norms = np.linalg.norm(a, axis=0)
    scale = float(norms.max()) if norms.size else 0.0
    live = norms > tol * max(1.0, scale)
    if not np.any(live):
        return fac  # everything silent: volumes are constantly zero
    u, sv, _ = np.linalg.svd(a[:, live])
    if sv.shape[0] > 1 and sv[1] > tol * sv[0]:
        return None
    common = u[:, 0] * sv[0]
    lam = np.zeros(a.shape[1], dtype=np.complex128)
    lam[live] = (common.conj() @ a[:, live]) / (np.linalg.norm(common) ** 2)
    return Factorization(
        gamma_hat=fac.gamma_hat * lam[None, :],
        alpha_hat=np.repeat(common[:, None], a.shape[1], axis=1),
    )


def separate(s: Scenario, fac: Factorization, tol: float = DEFAULT_TOL) -> Factorization:
    """Fill in the health-space factors gamma and alpha.

    Two routes are supported: a selection health map (always works), or a
    general linear map when a constant-volume split of the factors exists
    (regauging when needed).  The result satisfies
    H(v_jk)(i) = gamma_j(i) * alpha_k(i) within tol.
    """
    h = s.health
    if h.kind == "selection_matrix":
        f_idx = np.array([f for f, _ in h.rows])
        scales = np.array([sc for _, sc in h.rows])
        gamma = fac.gamma_hat[:, f_idx] * scales
        alpha = fac.alpha_hat[:, f_idx]
    elif h.kind == "general_linear":
        if not volume_factors_constant(fac, tol):
            regauged = constant_volume_regauge(fac, tol)
            if regauged is None:
                raise NotSeparableError(
                    "general linear health map requires a constant-volume "
                    "split of the factors, and none exists"
                )
            fac = regauged
        gamma = fac.gamma_hat @ h.matrix.T
        const = fac.alpha_hat.mean(axis=1)
        alpha = np.repeat(const[:, None], h.n, axis=1)
    else:
        raise NotSeparableError(
            f"cannot construct health-space factors for kind {h.kind!r}"
        )
    result = Factorization(
        gamma_hat=fac.gamma_hat, alpha_hat=fac.alpha_hat, gamma=gamma, alpha=alpha
    )
    images = s.health_images()
    err = np.max(np.abs(images - result.images()))
    if err > tol * max(1.0, float(np.max(np.abs(images)))):
        raise NotSeparableError(
            f"factor products deviate from health images by {err:.3e}"
        )
    return result


def build_index_sets(images: np.ndarray, tol: float = DEFAULT_TOL) -> IndexAssignment:
    """Assign each health coordinate to the sensor that hears it loudest.

    ``images`` is the (N, K, n) array of health images.  J_j collects the
    coordinates sensor j ever hears above tol; each coordinate then goes to
    the sensor with the largest peak magnitude (ties to the smallest j).
    Raises :class:`UncoverableIndexError` for coordinates in no J_j.
    """
    images = np.asarray(images)
    n_sensors, _, n = images.shape
    peak = np.max(np.abs(images), axis=1)  # (N, n)
    audible = peak > tol
    silent = [i for i in range(n) if not audible[:, i].any()]
    if silent:
        raise UncoverableIndexError(silent)
    J = [frozenset(np.nonzero(audible[j])[0].tolist()) for j in range(n_sensors)]
    owners = np.argmax(peak, axis=0)  # argmax ties break to smallest j
    owned = [[] for _ in range(n_sensors)]
    for i in range(n):
        owned[owners[i]].append(i)
    return IndexAssignment(J=tuple(J), I=tuple(tuple(s) for s in owned))


def is_i_radiative(fac: Factorization, i: int, tol: float = DEFAULT_TOL) -> bool:
    """Some time emits coordinate i: exists k with |alpha_k(i)| > tol."""
    return bool(np.any(np.abs(fac.alpha[:, i]) > tol))


def is_i_dominant(fac: Factorization, i: int, tol: float = DEFAULT_TOL) -> bool:
    """Some sensor hears coordinate i: exists j with |gamma_j(i)| > tol."""
    return bool(np.any(np.abs(fac.gamma[:, i]) > tol))


def is_strongly_i_dominant(
    fac: Factorization, i: int, n_sensors: int | None = None, tol: float = DEFAULT_TOL
) -> bool:
    """One sensor out-hears every other by the factor (N - 1), strictly."""
    mags = np.abs(fac.gamma[:, i])
    n_sensors = n_sensors if n_sensors is not None else mags.shape[0]
    for j in range(mags.shape[0]):
        if mags[j] <= tol:
            continue
        others = np.delete(mags, j)
        if others.size == 0 or np.all(mags[j] > (n_sensors - 1) * others):
            return True
    return False


def is_j_harmonious(
    fac: Factorization, assign: IndexAssignment, j: int, tol: float = DEFAULT_TOL
) -> bool:
    """Every coordinate sensor j owns is audible to some other sensor.

    Vacuously true when I_j is empty.  The negation (some owned coordinate
    heard only by j) is the j-disjoint case.
    """
    for i in assign.I[j]:
        others = np.delete(np.abs(fac.gamma[:, i]), j)
        if not np.any(others > tol):
            return False
    return True


def is_harmonious(
    fac: Factorization, assign: IndexAssignment, tol: float = DEFAULT_TOL
) -> bool:
    return all(is_j_harmonious(fac, assign, j, tol) for j in range(len(assign.I)))


@dataclass(frozen=True)
class SensorStatus:
    status: str  # "operational" | "non_operational" | "undefined"
    failed: tuple = ()  # (position, coordinate) pairs within I_j


def sensor_status(
    fac: Factorization, assign: IndexAssignment, j: int, tol: float = DEFAULT_TOL
) -> SensorStatus:
    """Operational iff gamma_j is nonzero on every coordinate the sensor owns."""
    owned = assign.I[j]
    if not owned:
        return SensorStatus(status="undefined")
    failed = tuple(
        (ell, i) for ell, i in enumerate(owned) if np.abs(fac.gamma[j, i]) <= tol
    )
    if failed:
        return SensorStatus(status="non_operational", failed=failed)
    return SensorStatus(status="operational")


def free_space_snr(
    signal_power: float,
    noise_power: float,
    signal_distance: float,
    noise_distance: float,
    reference_distance: float = 1.0,
) -> float:
    """SNR at a sensor under inverse-square propagation.

    ``signal_power`` and ``noise_power`` are measured at ``reference_distance``;
    received power falls off as (reference / distance)**2, so doubling a
    distance costs a factor of 4.
    """
    received_signal = signal_power * (reference_distance / signal_distance) ** 2
    received_noise = noise_power * (reference_distance / noise_distance) ** 2
    return received_signal / received_noise


def _complex_out(z: complex):
    if z.imag == 0.0:
        return z.real
    return {"re": z.real, "im": z.imag}


def scenario_to_json_dict(s: Scenario) -> dict:
    """Serialize with 1-based index sets and {re, im} complex entries."""
    doc = {
        "M": s.M,
        "N": s.N,
        "K": s.K,
        "covering": [sorted(f + 1 for f in t) for t in s.covering],
        "partition": [sorted(f + 1 for f in t) for t in s.partition],
        "readings": [
            [[_complex_out(complex(z)) for z in row] for row in sensor]
            for sensor in s.readings
        ],
    }
    h = s.health
    if h.kind == "selection_matrix":
        doc["health"] = {
            "kind": "selection_matrix",
            "n": h.n,
            "rows": [
                [i + 1, f + 1, _complex_out(scale)]
                for i, (f, scale) in enumerate(h.rows)
            ],
        }
    elif h.kind == "general_linear":
        doc["health"] = {
            "kind": "general_linear",
            "n": h.n,
            "matrix": [[_complex_out(complex(z)) for z in row] for row in h.matrix],
        }
    else:
        raise ValueError("opaque health maps cannot be serialized")
    return doc


def scenario_from_json_dict(doc: dict) -> Scenario:
    readings = np.asarray(
        [
            [[parse_complex(z) for z in row] for row in sensor]
            for sensor in doc["readings"]
        ],
        dtype=np.complex128,
    )
    if readings.shape != (doc["N"], doc["K"], doc["M"]):
        raise ValueError(
            f"readings shape {readings.shape} disagrees with declared "
            f"(N, K, M) = {(doc['N'], doc['K'], doc['M'])}"
        )
    covering = [frozenset(f - 1 for f in t) for t in doc["covering"]]
    partition = [frozenset(f - 1 for f in t) for t in doc["partition"]]
    hdoc = doc["health"]
    if hdoc["kind"] == "selection_matrix":
        rows = [None] * hdoc["n"]
        for i, f, scale in hdoc["rows"]:
            rows[i - 1] = (f - 1, parse_complex(scale))
        health = HealthMap.selection(hdoc["n"], rows)
    elif hdoc["kind"] == "general_linear":
        matrix = [[parse_complex(z) for z in row] for row in hdoc["matrix"]]
        health = HealthMap.linear(matrix)
    else:
        raise ValueError(f"unknown health map kind {hdoc['kind']!r}")
    return Scenario(tuple(covering), tuple(partition), readings, health)
