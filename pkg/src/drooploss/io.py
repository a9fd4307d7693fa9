"""File formats: JSON network files, JSON model dumps and commented CSV tables.

Network file::

    {
      "n_nodes": 3,
      "alpha": 0.2,
      "edges": [[1, 2, 1.0], [2, 3, 2.0, 0.4]],
      "shunt_b": [0, 0, 0],
      "params": {"k_p": 1, "k_q": 1, "tau_p": 1, "tau_q": 1, "c_q": 1}
    }

Node indices are 1-based. An edge is ``[i, k, b]`` (conductance ``alpha*b``)
or ``[i, k, b, g]``. ``shunt_b`` may be a scalar or a per-node list.
"""
from __future__ import annotations

import csv
import io as _io
import json
import re
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import InverterParams, StateSpaceModel
from .errors import GraphValidationError, ValidationError
from .network import Edge, NetworkGraph

PARAM_KEYS = ("k_p", "k_q", "tau_p", "tau_q", "shunt_b", "c_q", "alpha")


class NetworkFileError(GraphValidationError):
    def __init__(self, msg, path=None, line=None):
        where = f"{path}" if path else "<network>"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {msg}")
        self.line = line


def _edge_lines(text):
    """Line number of every edge entry, in order of appearance."""
    start = text.find('"edges"')
    if start < 0:
        return []
    out = []
    for m in re.finditer(r"\[\s*-?\d+(?:\.\d*)?\s*,\s*-?\d+(?:\.\d*)?\s*,", text[start:]):
        out.append(text.count("\n", 0, start + m.start()) + 1)
    return out


def _key_line(text, key):
    pos = text.find(f'"{key}"')
    return None if pos < 0 else text.count("\n", 0, pos) + 1


def network_from_dict(data: dict, *, text: str = "", path=None) -> NetworkGraph:
    edge_lines = _edge_lines(text)

    def fail(msg, key=None, edge=None):
        line = None
        if edge is not None and edge < len(edge_lines):
            line = edge_lines[edge]
        elif key is not None:
            line = _key_line(text, key)
        raise NetworkFileError(msg, path, line)

    if not isinstance(data, dict):
        fail("top level must be an object")
    if "n_nodes" not in data:
        fail("missing 'n_nodes'")
    n = data["n_nodes"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        fail(f"n_nodes must be a positive integer, got {n!r}", key="n_nodes")
    if data.get("shunt_g") not in (None, 0, 0.0) and np.any(np.asarray(data["shunt_g"]) != 0):
        fail("shunt conductances are fixed at zero", key="shunt_g")
    alpha = data.get("alpha")
    if alpha is not None and not (isinstance(alpha, (int, float)) and 0 <= alpha < 1):
        fail(f"alpha must lie in [0, 1), got {alpha!r}", key="alpha")
    raw_edges = data.get("edges", [])
    if not isinstance(raw_edges, list):
        fail("'edges' must be a list", key="edges")
    edges = []
    for idx, e in enumerate(raw_edges):
        if not isinstance(e, list) or len(e) not in (3, 4):
            fail(f"edge {idx + 1}: expected [i, k, b] or [i, k, b, g]", edge=idx)
        i, k = e[0], e[1]
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (i, k)):
            fail(f"edge {idx + 1}: node indices must be integers", edge=idx)
        if not (1 <= i <= n and 1 <= k <= n):
            fail(f"edge {idx + 1}: endpoint out of range 1..{n}", edge=idx)
        b = float(e[2])
        if len(e) == 4:
            g = float(e[3])
        elif alpha is not None:
            g = alpha * b
        else:
            fail(f"edge {idx + 1}: no conductance given and no global 'alpha'", edge=idx)
        edges.append(Edge(i - 1, k - 1, b, g))
    try:
        graph = NetworkGraph(n, tuple(edges), data.get("shunt_b", 0.0))
    except GraphValidationError as exc:
        m = re.match(r"edge (\d+):", str(exc))
        if m:
            fail(str(exc).replace(f"edge {m.group(1)}", f"edge {int(m.group(1)) + 1}"), edge=int(m.group(1)))
        fail(str(exc), key="shunt_b" if "shunt" in str(exc) else None)
    return graph


def load_network(path) -> tuple[NetworkGraph, dict]:
    """Read a network file; returns the graph and the raw ``params`` block (may be empty)."""
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFileError(f"invalid JSON: {exc.msg}", path, exc.lineno) from exc
    graph = network_from_dict(data, text=text, path=path)
    params = data.get("params") or {}
    if not isinstance(params, dict):
        raise NetworkFileError("'params' must be an object", path, _key_line(text, "params"))
    unknown = set(params) - set(PARAM_KEYS)
    if unknown:
        raise NetworkFileError(f"unknown params {sorted(unknown)}", path, _key_line(text, "params"))
    params = dict(params)
    if "alpha" not in params and data.get("alpha") is not None:
        params["alpha"] = data["alpha"]
    return graph, params


def network_to_dict(graph: NetworkGraph, params: InverterParams | None = None) -> dict:
    out = {
        "n_nodes": graph.n_nodes,
        "edges": [[e.i + 1, e.k + 1, e.b, e.g] for e in graph.edges],
        "shunt_b": graph.shunt_b.tolist(),
    }
    if graph.alpha is not None:
        out["alpha"] = graph.alpha
    if params is not None:
        out["params"] = {k: v for k, v in params.to_dict().items() if v is not None}
    return out


def save_network(graph: NetworkGraph, path, params: InverterParams | None = None) -> None:
    Path(path).write_text(json.dumps(network_to_dict(graph, params), indent=2) + "\n")


def params_from_dict(d: dict, **overrides) -> InverterParams:
    """Build :class:`InverterParams`; accepts ``c_q`` in place of ``shunt_b``."""
    merged = {k: v for k, v in d.items() if v is not None}
    merged.update({k: v for k, v in overrides.items() if v is not None})
    c_q = merged.pop("c_q", None)
    if c_q is not None:
        k_q = np.asarray(merged.get("k_q", 1.0), dtype=float)
        implied = (np.asarray(c_q, dtype=float) - 1.0) / (2.0 * k_q)
        if "shunt_b" in merged and not np.allclose(merged["shunt_b"], implied):
            raise ValidationError("c_q and shunt_b given with inconsistent values")
        merged["shunt_b"] = implied.tolist() if implied.ndim else float(implied)
    return InverterParams(**merged)


def model_to_dict(model: StateSpaceModel) -> dict:
    return {
        "kind": model.kind,
        "n_nodes": model.n_nodes,
        "state_labels": model.state_labels(),
        "input_labels": model.input_labels(),
        "output_labels": ([f"y_phase_{i + 1}" for i in range(model.n_nodes)]
                          + [f"y_voltage_{i + 1}" for i in range(model.n_nodes)]),
        "A": model.A.tolist(),
        "B": model.B.tolist(),
        "C": model.C.tolist(),
    }


def dump_model(model: StateSpaceModel, path) -> None:
    """Write ``A``, ``B``, ``C`` with block labels as JSON."""
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def load_model(path) -> StateSpaceModel:
    d = json.loads(Path(path).read_text())
    return StateSpaceModel(np.array(d["A"]), np.array(d["B"]), np.array(d["C"]),
                           d["n_nodes"], d.get("kind", "full"))


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render_csv(columns, rows, config: dict) -> str:
    """CSV text: a ``#`` comment line with version and config, a header, then rows."""
    buf = _io.StringIO()
    buf.write(f"# drooploss {__version__} config={json.dumps(config, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def read_csv(path_or_text) -> tuple[dict, list[dict]]:
    """Parse a table written by :func:`render_csv`; returns ``(config, rows)``."""
    text = Path(path_or_text).read_text() if isinstance(path_or_text, Path) else path_or_text
    lines = text.splitlines()
    config = {}
    if lines and lines[0].startswith("#"):
        config = json.loads(lines[0].split("config=", 1)[1])
        lines = lines[1:]
    rows = list(csv.DictReader(lines))
    return config, rows
