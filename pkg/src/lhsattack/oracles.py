"""Sign-only decision oracles with exact query accounting.

An oracle answers a single question about a point: is it adversarial
(+1) or not (-1). Nothing else — no scores, no gradients — crosses the
query interface. Every answer is metered through :func:`decide`, which
increments a :class:`QueryLedger` exactly once per call; there is no other
path to an oracle anywhere in the package, so ledger totals are exact.

Four oracle kinds are provided: two analytic geometries (halfspace,
hypersphere) whose true boundary normals are known in closed form, a small
fully-connected classifier, and an external-process oracle speaking a
plain-text line protocol for attacking models that live outside this
process.
"""
from __future__ import annotations

import os
import select
import shlex
import subprocess
import sys
import threading
import time
from dataclasses import dataclass

import numpy as np

from .errors import (
    CapabilityError,
    OracleFailedError,
    ProtocolError,
    QueryBudgetExceededError,
    WeightsFormatError,
)

__all__ = [
    "PHASE_INIT",
    "PHASE_BINSEARCH",
    "PHASE_GRADIENT",
    "PHASE_STEP",
    "PHASES",
    "UNTARGETED",
    "TARGETED",
    "QueryLedger",
    "MeteredOracle",
    "DecisionOracle",
    "HalfspaceOracle",
    "HypersphereOracle",
    "MlpOracle",
    "ExternalOracle",
    "decide",
    "true_gradient",
    "MlpLayer",
    "MlpModel",
    "mlp_forward",
    "load_mlp",
    "save_mlp",
    "format_floats",
    "parse_floats",
    "serve_oracle",
]

PHASE_INIT = "init"
PHASE_BINSEARCH = "binsearch"
PHASE_GRADIENT = "gradient"
PHASE_STEP = "step"
PHASES = (PHASE_INIT, PHASE_BINSEARCH, PHASE_GRADIENT, PHASE_STEP)

UNTARGETED = "untargeted"
TARGETED = "targeted"

RELU = "relu"
IDENTITY = "identity"
_ACTIVATIONS = (RELU, IDENTITY)


class QueryLedger:
    """Phase-labelled query counter.

    ``per_phase`` maps each phase label (init, binsearch, gradient, step)
    to the number of oracle calls charged to it; ``total_queries`` is their
    sum, maintained incrementally. Increments are atomic, so one ledger can
    serve concurrent callers.
    """

    __slots__ = ("_lock", "per_phase", "_total")

    def __init__(self):
        self._lock = threading.Lock()
        self.per_phase = {p: 0 for p in PHASES}
        self._total = 0

    @property
    def total_queries(self) -> int:
        return self._total

    def record(self, phase: str) -> None:
        """Charge one query to ``phase``."""
        if phase not in self.per_phase:
            raise ValueError(f"unknown query phase {phase!r}; expected one of {PHASES}")
        with self._lock:
            self.per_phase[phase] += 1
            self._total += 1

    def snapshot(self) -> dict:
        """A consistent copy of the per-phase counts."""
        with self._lock:
            return dict(self.per_phase)

    def __repr__(self):
        return f"QueryLedger(total={self._total}, per_phase={self.per_phase})"


class DecisionOracle:
    """Base class: a sign rule over points of a fixed dimension.

    Subclasses implement ``_decide(x) -> +1 | -1`` on a float64 vector of
    length ``dim`` and must not be called directly — all access goes
    through :func:`decide` (or a :class:`MeteredOracle`) so that every
    query lands in a ledger.
    """

    kind = "abstract"

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("oracle dimension must be positive")
        self.dim = int(dim)

    def _decide(self, x: np.ndarray) -> int:
        raise NotImplementedError

    def decide(self, x, ledger: QueryLedger, phase: str) -> int:
        return decide(self, x, ledger, phase)


def decide(oracle: DecisionOracle, x, ledger: QueryLedger, phase: str) -> int:
    """Evaluate the oracle's sign rule on ``x``, charging exactly one query.

    Parameters
    ----------
    oracle : DecisionOracle
    x : array_like, shape (oracle.dim,)
        The point to classify. Callers clip into the box first; coordinates
        are assumed in range and are not re-checked here.
    ledger : QueryLedger
    phase : str
        One of ``PHASES``; attributes the query in the ledger.

    Returns
    -------
    int
        +1 (adversarial) or -1 (not adversarial).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (oracle.dim,):
        raise ValueError(
            f"point has shape {x.shape}, oracle expects ({oracle.dim},)")
    ledger.record(phase)
    return oracle._decide(x)


class MeteredOracle:
    """An oracle bound to a ledger and an optional hard query cap.

    The attack operations take one of these instead of a bare oracle so
    that budget enforcement lives in a single place: the cap is checked
    *before* each call, and crossing it raises
    :class:`QueryBudgetExceededError` without spending the query.
    """

    def __init__(self, oracle: DecisionOracle, ledger: QueryLedger | None = None,
                 max_queries: int | None = None):
        self.oracle = oracle
        self.ledger = ledger if ledger is not None else QueryLedger()
        self.max_queries = max_queries

    @property
    def dim(self) -> int:
        return self.oracle.dim

    def decide(self, x, phase: str) -> int:
        if self.max_queries is not None and self.ledger.total_queries >= self.max_queries:
            raise QueryBudgetExceededError(
                f"query budget of {self.max_queries} exhausted")
        return decide(self.oracle, x, self.ledger, phase)


class HalfspaceOracle(DecisionOracle):
    """+1 on the open side of a hyperplane: normal . x + offset > 0.

    Points exactly on the plane answer -1. The true boundary normal is the
    (normalized) ``normal`` vector everywhere.
    """

    kind = "halfspace"

    def __init__(self, normal, offset: float, original=None):
        normal = np.asarray(normal, dtype=np.float64)
        if normal.ndim != 1:
            raise ValueError("halfspace normal must be a vector")
        if not np.linalg.norm(normal) > 0.0:
            raise ValueError("halfspace normal must be nonzero")
        super().__init__(normal.shape[0])
        self.normal = normal
        self.offset = float(offset)
        self.original = None if original is None else _as_point(original, self.dim)

    def _decide(self, x):
        return 1 if float(self.normal @ x) + self.offset > 0.0 else -1


class HypersphereOracle(DecisionOracle):
    """+1 strictly outside a ball of radius ``radius`` around ``original``.

    The minimal-distortion adversarial point sits exactly at distance
    ``radius`` from the center, which gives end-to-end convergence tests a
    closed-form optimum.
    """

    kind = "hypersphere"

    def __init__(self, original, radius: float):
        original = np.asarray(original, dtype=np.float64)
        if original.ndim != 1:
            raise ValueError("original point must be a vector")
        if not radius > 0.0:
            raise ValueError("hypersphere radius must be positive")
        super().__init__(original.shape[0])
        self.original = original
        self.radius = float(radius)

    def _decide(self, x):
        d = x - self.original
        return 1 if float(np.sqrt(d @ d)) > self.radius else -1


class MlpOracle(DecisionOracle):
    """Classifier-backed oracle over a small fully-connected network.

    Untargeted mode answers +1 when the predicted class differs from
    ``original_class``; targeted mode answers +1 when the prediction
    equals ``target_class``. Argmax ties resolve to the lowest class
    index. Scores themselves never leave the oracle.
    """

    kind = "mlp"

    def __init__(self, model: "MlpModel", original=None, mode: str = UNTARGETED,
                 original_class: int | None = None, target_class: int | None = None):
        super().__init__(model.input_dim)
        self.model = model
        self.original = None if original is None else _as_point(original, self.dim)
        if mode not in (UNTARGETED, TARGETED):
            raise ValueError(f"unknown oracle mode {mode!r}")
        self.mode = mode
        if mode == TARGETED:
            if target_class is None:
                raise ValueError("targeted mode requires target_class")
            if not 0 <= int(target_class) < model.class_count:
                raise ValueError("target_class out of range")
        self.target_class = None if target_class is None else int(target_class)
        if original_class is None and self.original is not None:
            # Label of the unperturbed input, inferred once at setup time
            # (model evaluation at construction is not a metered query).
            original_class = int(np.argmax(mlp_forward(model, self.original)))
        if original_class is None:
            if mode == UNTARGETED:
                raise ValueError(
                    "untargeted mode requires an original point or original_class")
        elif not 0 <= int(original_class) < model.class_count:
            raise ValueError("original_class out of range")
        self.original_class = None if original_class is None else int(original_class)

    def _decide(self, x):
        top = int(np.argmax(mlp_forward(self.model, x)))
        if self.mode == TARGETED:
            return 1 if top == self.target_class else -1
        return 1 if top != self.original_class else -1


def _as_point(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (dim,):
        raise ValueError(f"point has shape {x.shape}, expected ({dim},)")
    return x


def true_gradient(oracle: DecisionOracle, x) -> np.ndarray:
    """Unit direction of increasing adversariality, analytic oracles only.

    Halfspace: the normalized plane normal (constant everywhere).
    Hypersphere: the outward radial direction at ``x``, which requires
    ``x`` to differ from the center.

    Raises
    ------
    CapabilityError
        For oracle kinds without a closed-form boundary normal.
    """
    if oracle.kind == "halfspace":
        return oracle.normal / np.linalg.norm(oracle.normal)
    if oracle.kind == "hypersphere":
        d = _as_point(x, oracle.dim) - oracle.original
        n = np.linalg.norm(d)
        if n == 0.0:
            raise ValueError("radial direction undefined at the center")
        return d / n
    raise CapabilityError(
        f"true gradient unavailable for oracle kind {oracle.kind!r}")


# ---------------------------------------------------------------------------
# Fully-connected classifier


@dataclass
class MlpLayer:
    """One affine layer: x -> activation(weight @ x + bias)."""

    weight: np.ndarray
    bias: np.ndarray
    activation: str

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 2:
            raise ValueError("layer weight must be a matrix")
        if self.bias.shape != (self.weight.shape[0],):
            raise ValueError(
                f"bias length {self.bias.shape} does not match "
                f"{self.weight.shape[0]} output rows")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not (np.isfinite(self.weight).all() and np.isfinite(self.bias).all()):
            raise ValueError("layer parameters must be finite")


@dataclass
class MlpModel:
    """A stack of :class:`MlpLayer` ending in ``class_count`` score outputs."""

    layers: list
    class_count: int

    def __post_init__(self):
        if not self.layers:
            raise ValueError("model needs at least one layer")
        if self.class_count < 2:
            raise ValueError("model needs at least two classes")
        for prev, cur in zip(self.layers, self.layers[1:]):
            if cur.weight.shape[1] != prev.weight.shape[0]:
                raise ValueError(
                    f"layer input width {cur.weight.shape[1]} does not match "
                    f"previous output width {prev.weight.shape[0]}")
        if self.layers[-1].weight.shape[0] != self.class_count:
            raise ValueError(
                f"final layer width {self.layers[-1].weight.shape[0]} "
                f"!= class count {self.class_count}")

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1]


def mlp_forward(model: MlpModel, x) -> np.ndarray:
    """Raw class scores for ``x`` (no softmax; argmax is all that matters)."""
    h = np.asarray(x, dtype=np.float64)
    if h.shape != (model.input_dim,):
        raise ValueError(
            f"input has shape {h.shape}, model expects ({model.input_dim},)")
    for layer in model.layers:
        h = layer.weight @ h + layer.bias
        if layer.activation == RELU:
            h = np.maximum(h, 0.0)
    return h


def save_mlp(model: MlpModel, path) -> None:
    """Write a model in the plain-text weights format (see :func:`load_mlp`)."""
    lines = [f"mlp k={model.class_count} layers={len(model.layers)}"]
    for layer in model.layers:
        rows, cols = layer.weight.shape
        lines.append(f"layer {rows} {cols} {layer.activation}")
        for r in range(rows):
            lines.append(format_floats(layer.weight[r]))
        lines.append(format_floats(layer.bias))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mlp(path) -> MlpModel:
    """Read a model from the plain-text weights format.

    Format: a header line ``mlp k=<classes> layers=<L>``, then for each
    layer a line ``layer <rows> <cols> <activation>`` followed by ``rows``
    lines of ``cols`` whitespace-separated floats (the weight matrix) and
    one line of ``rows`` floats (the bias).

    Raises
    ------
    WeightsFormatError
        On any parse failure or shape-invariant violation; the message
        carries the offending line number.
    """
    with open(path, "r", encoding="ascii") as fh:
        raw = fh.read().splitlines()

    def fail(lineno, msg):
        raise WeightsFormatError(f"{path}:{lineno}: {msg}")

    def floats(lineno, count):
        if lineno > len(raw):
            fail(len(raw), "file ended early")
        toks = raw[lineno - 1].split()
        if len(toks) != count:
            fail(lineno, f"expected {count} values, found {len(toks)}")
        try:
            return np.array([float(t) for t in toks], dtype=np.float64)
        except ValueError:
            fail(lineno, "unparseable float")

    if not raw:
        fail(1, "empty file")
    head = raw[0].split()
    if len(head) != 3 or head[0] != "mlp" or not head[1].startswith("k=") \
            or not head[2].startswith("layers="):
        fail(1, "header must read 'mlp k=<classes> layers=<L>'")
    try:
        class_count = int(head[1][2:])
        n_layers = int(head[2][7:])
    except ValueError:
        fail(1, "header counts must be integers")
    if n_layers < 1:
        fail(1, "layer count must be positive")

    layers = []
    lineno = 2
    for li in range(n_layers):
        if lineno > len(raw):
            fail(len(raw), f"file ended before layer {li}")
        toks = raw[lineno - 1].split()
        if len(toks) != 4 or toks[0] != "layer":
            fail(lineno, "expected 'layer <rows> <cols> <activation>'")
        try:
            rows, cols = int(toks[1]), int(toks[2])
        except ValueError:
            fail(lineno, "layer dimensions must be integers")
        act = toks[3].lower()
        if act not in _ACTIVATIONS:
            fail(lineno, f"unknown activation {toks[3]!r}")
        if rows < 1 or cols < 1:
            fail(lineno, "layer dimensions must be positive")
        lineno += 1
        weight = np.empty((rows, cols), dtype=np.float64)
        for r in range(rows):
            weight[r] = floats(lineno, cols)
            lineno += 1
        bias = floats(lineno, rows)
        lineno += 1
        layers.append(MlpLayer(weight=weight, bias=bias, activation=act))

    if lineno <= len(raw) and any(l.strip() for l in raw[lineno - 1:]):
        fail(lineno, "trailing content after last layer")
    try:
        return MlpModel(layers=layers, class_count=class_count)
    except ValueError as exc:
        raise WeightsFormatError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# External-process oracle: plain-text line protocol


def format_floats(values) -> str:
    """Render a float vector at 17 significant digits, space-separated.

    17 digits round-trip IEEE doubles exactly, so a peer that parses this
    line recovers bit-identical values.
    """
    return " ".join(f"{float(v):.17g}" for v in values)


def parse_floats(line: str, expected: int) -> np.ndarray:
    """Parse a protocol line of ``expected`` floats.

    Raises
    ------
    ProtocolError
        On a wrong token count or an unparseable token.
    """
    toks = line.split()
    if len(toks) != expected:
        raise ProtocolError(
            f"expected {expected} values on the line, found {len(toks)}")
    try:
        return np.array([float(t) for t in toks], dtype=np.float64)
    except ValueError as exc:
        raise ProtocolError(f"unparseable float in request line: {exc}") from exc


class ExternalOracle(DecisionOracle):
    """Decision oracle running in a child process, one query per line.

    Protocol, all lines newline-terminated ASCII: the engine opens with
    ``HELLO m=<dim>`` and the peer answers ``OK``; thereafter each request
    is ``dim`` floats at 17 significant digits separated by spaces, and
    each reply is ``+1`` or ``-1``. Requests are strictly serialized over
    the single pipe pair; callers must not interleave.

    The child is spawned lazily on the first query (or via :meth:`start`)
    and is reaped by :meth:`close`; the class doubles as a context
    manager. A reply slower than ``timeout`` seconds, a dead pipe, or an
    unlaunchable command raises :class:`OracleFailedError`; a reply that
    is not ``+1``/``-1`` raises :class:`ProtocolError`.
    """

    kind = "external"

    def __init__(self, cmd, dim: int, timeout: float = 10.0, original=None):
        super().__init__(dim)
        self.cmd = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
        if not self.cmd:
            raise ValueError("external oracle command is empty")
        self.timeout = float(timeout)
        self.original = None if original is None else _as_point(original, self.dim)
        self._proc = None
        self._buf = b""

    def start(self) -> None:
        """Spawn the child and complete the handshake."""
        if self._proc is not None:
            return
        try:
            self._proc = subprocess.Popen(
                self.cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                bufsize=0)
        except OSError as exc:
            raise OracleFailedError(
                f"could not launch oracle process {self.cmd!r}: {exc}") from exc
        os.set_blocking(self._proc.stdin.fileno(), False)
        os.set_blocking(self._proc.stdout.fileno(), False)
        deadline = time.monotonic() + self.timeout
        self._send(f"HELLO m={self.dim}\n", deadline)
        reply = self._recv_line(deadline)
        if reply != "OK":
            raise ProtocolError(f"handshake reply was {reply!r}, expected 'OK'")

    def close(self) -> None:
        """Close the pipes and reap the child (kill it if it lingers)."""
        proc, self._proc = self._proc, None
        self._buf = b""
        if proc is None:
            return
        for pipe in (proc.stdin, proc.stdout):
            try:
                pipe.close()
            except OSError:
                pass
        try:
            proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc_info):
        self.close()

    def _decide(self, x):
        self.start()
        deadline = time.monotonic() + self.timeout
        self._send(format_floats(x) + "\n", deadline)
        reply = self._recv_line(deadline)
        if reply == "+1":
            return 1
        if reply == "-1":
            return -1
        raise ProtocolError(f"oracle replied {reply!r}, expected '+1' or '-1'")

    def _dead(self, what):
        rc = self._proc.poll()
        detail = f"exited with status {rc}" if rc is not None else "closed the pipe"
        return OracleFailedError(f"oracle process {detail} while {what}")

    def _send(self, text: str, deadline: float) -> None:
        data = text.encode("ascii")
        fd = self._proc.stdin.fileno()
        sent = 0
        while sent < len(data):
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise OracleFailedError(
                    f"oracle did not accept the request within {self.timeout} s")
            _, ready, _ = select.select([], [fd], [], remaining)
            if not ready:
                continue
            try:
                sent += os.write(fd, data[sent:])
            except BlockingIOError:
                continue
            except (BrokenPipeError, OSError):
                raise self._dead("receiving a request") from None

    def _recv_line(self, deadline: float) -> str:
        fd = self._proc.stdout.fileno()
        while b"\n" not in self._buf:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise OracleFailedError(
                    f"oracle did not reply within {self.timeout} s")
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                continue
            try:
                chunk = os.read(fd, 65536)
            except BlockingIOError:
                continue
            if not chunk:
                raise self._dead("awaiting a reply")
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return line.decode("ascii", errors="replace")


def serve_oracle(decision_fn, dim: int, infile=None, outfile=None) -> int:
    """Answer line-protocol queries on a stream pair until EOF.

    This is the peer side of :class:`ExternalOracle`: it validates the
    ``HELLO m=<dim>`` handshake, replies ``OK``, then maps every request
    line through ``decision_fn`` (an ``(ndarray,) -> +1 | -1`` callable)
    and writes ``+1`` or ``-1`` back. Defaults to stdin/stdout so a
    process can expose any in-process oracle over its standard streams.

    Returns
    -------
    int
        Number of decisions served.

    Raises
    ------
    ProtocolError
        On a bad handshake or a malformed request line.
    """
    infile = sys.stdin if infile is None else infile
    outfile = sys.stdout if outfile is None else outfile
    line = infile.readline()
    if not line:
        raise ProtocolError("stream closed before handshake")
    greeting = line.rstrip("\n")
    if not greeting.startswith("HELLO m="):
        raise ProtocolError(f"bad handshake {greeting!r}")
    try:
        peer_dim = int(greeting[8:])
    except ValueError as exc:
        raise ProtocolError(f"bad handshake {greeting!r}") from exc
    if peer_dim != dim:
        raise ProtocolError(
            f"peer announced dimension {peer_dim}, serving {dim}")
    outfile.write("OK\n")
    outfile.flush()
    served = 0
    for line in iter(infile.readline, ""):
        x = parse_floats(line.rstrip("\n"), dim)
        outfile.write("+1\n" if decision_fn(x) > 0 else "-1\n")
        outfile.flush()
        served += 1
    return served
