"""OpenQASM 3 emission of compiled circuits and a reader for the emitted subset.

Each clique phase becomes one multi-controlled ``rz`` on the embedding
auxiliary: ``rz(-4*gamma)`` is ``diag(exp(2i*gamma), exp(-2i*gamma))``, which
is exactly the pair of opposite phases the gate applies on embed = 0 / 1.
Controls are the rp auxiliary (``ctrl`` or ``negctrl`` by polarity) followed by
the clique's target qubits (``negctrl`` where ``y_v = 0``).
"""
from __future__ import annotations

import math
import re

from .circuit import CircuitIR, CliquePhase, Hadamard, QubitLayout

HEADER = "OPENQASM 3.0;"


def _mod(bit: int) -> str:
    return "ctrl @ " if bit else "negctrl @ "


def export_qasm(circuit: CircuitIR) -> str:
    layout = circuit.layout
    n, k, m = layout.n_target, layout.n_cliques, layout.m
    lines = [
        HEADER,
        'include "stdgates.inc";',
        f"// targets q[0..{n - 1}], embedding auxiliary q[{n}], rp auxiliaries q[{n + 1}..{m - 1}]",
        f"qubit[{m}] q;",
        f"bit[{n}] x;",
    ]
    if k:
        lines.append(f"bit[{k}] rp;")
    lines += [f"h q[{i}];" for i in range(m)]
    for gate in circuit.gates:
        if isinstance(gate, Hadamard):
            lines.append(f"h q[{gate.qubit}];")
        elif isinstance(gate, CliquePhase):
            angle = 4.0 * gate.gamma if gate.adjoint else -4.0 * gate.gamma
            mods = _mod(gate.polarity) + "".join(_mod(b) for b in gate.y)
            qubits = ", ".join(f"q[{i}]" for i in (gate.rp_control, *gate.targets, gate.embed))
            lines.append(f"{mods}rz({angle!r}) {qubits};")
        else:
            raise TypeError(f"cannot emit {gate!r}")
    lines += [f"rp[{c}] = measure q[{layout.rp_aux(c)}];" for c in range(k)]
    lines += [f"x[{v}] = measure q[{v}];" for v in range(n)]
    return "\n".join(lines) + "\n"


_QUBIT_DECL = re.compile(r"^qubit\[(\d+)\]\s+q;$")
_XBITS = re.compile(r"^bit\[(\d+)\]\s+x;$")
_H = re.compile(r"^h\s+q\[(\d+)\];$")
_MCRZ = re.compile(r"^((?:(?:neg)?ctrl\s*@\s*)+)rz\(([^)]+)\)\s+(.+);$")
_MEASURE = re.compile(r"^(\w+)\[(\d+)\]\s*=\s*measure\s+q\[(\d+)\];$")


class QasmParseError(ValueError):
    pass


def parse_qasm(text: str) -> CircuitIR:
    """Rebuild a :class:`CircuitIR` from text written by :func:`export_qasm`."""
    m = n = None
    prep, gates, cliques = set(), [], {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("//", 1)[0].strip()
        if not line or line == HEADER or line.startswith("include"):
            continue
        if (mt := _QUBIT_DECL.match(line)):
            m = int(mt.group(1))
        elif (mt := _XBITS.match(line)):
            n = int(mt.group(1))
        elif (mt := _H.match(line)):
            q = int(mt.group(1))
            if len(prep) < (m or 0) and q not in prep and not gates:
                prep.add(q)  # initial |+> preparation
            else:
                gates.append(Hadamard(q))
        elif (mt := _MCRZ.match(line)):
            mods = [tok.strip() for tok in mt.group(1).split("@") if tok.strip()]
            angle = float(mt.group(2))
            qubits = [int(s) for s in re.findall(r"q\[(\d+)\]", mt.group(3))]
            if len(qubits) != len(mods) + 1:
                raise QasmParseError(f"line {lineno}: control count does not match qubits")
            polarity = 1 if mods[0] == "ctrl" else 0
            rp, targets, embed = qubits[0], tuple(qubits[1:-1]), qubits[-1]
            y = tuple(1 if tok == "ctrl" else 0 for tok in mods[1:])
            c = rp - embed - 1
            cliques.setdefault(c, targets)
            gates.append(CliquePhase(rp, polarity, c, targets, y, embed, abs(angle) / 4.0,
                                     adjoint=math.copysign(1.0, angle) > 0))
        elif _MEASURE.match(line) or line.startswith("bit["):
            continue
        else:
            raise QasmParseError(f"line {lineno}: unsupported statement {raw!r}")
    if m is None or n is None:
        raise QasmParseError("missing qubit or target bit declaration")
    if len(prep) != m:
        raise QasmParseError("expected a Hadamard on every qubit before the first gate")
    k = m - n - 1
    layout = QubitLayout(n, k)
    clique_list = tuple(cliques.get(c, ()) for c in range(k))
    gammas = {(g.clique, g.y): g.gamma for g in gates if isinstance(g, CliquePhase)}
    return CircuitIR(layout, clique_list, tuple(gates), gammas)


def gate_count(text: str) -> int:
    """Number of gate and measurement statements (declarations excluded)."""
    count = 0
    for raw in text.splitlines():
        line = raw.split("//", 1)[0].strip()
        if _H.match(line) or _MCRZ.match(line) or _MEASURE.match(line):
            count += 1
    return count
