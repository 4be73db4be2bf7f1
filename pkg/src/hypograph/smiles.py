"""A small molecular line-notation (SMILES subset) reader and debug writer.

Supported: organic-subset atoms ``B C N O P S F Cl Br I``, aromatic
``b c n o p s``, bracket atoms with explicit H count and charge, bonds
``- = # :``, branches and ring closures ``1``-``9`` / ``%nn``. Stereo,
isotopes, atom classes, wildcards and ``.`` are rejected.

Hydrogens are never materialized as nodes; bracket atoms record their H count
in the ``hcount`` attribute, other atoms get ``hcount=default``.
"""
from __future__ import annotations

from hypograph.graph import EdgeLabel, LabeledGraph, NodeLabel


class ParseError(ValueError):
    def __init__(self, message: str, column: int):
        super().__init__(f"column {column}: {message}")
        self.message = message
        self.column = column


ORGANIC = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")
AROMATIC = ("b", "c", "n", "o", "p", "s")
BRACKET_AROMATIC = ("se", "as", "b", "c", "n", "o", "p", "s")
ELEMENTS = frozenset(
    """H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn
    Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce
    Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn
    Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl
    Mc Lv Ts Og""".split()
)
BOND_KINDS = {"-": "single", "=": "double", "#": "triple", ":": "aromatic"}
BOND_SYMBOLS = {v: k for k, v in BOND_KINDS.items()}


def _atom(element: str, aromatic: bool, charge: int = 0, hcount: str = "default") -> NodeLabel:
    sign = "0" if charge == 0 else f"{charge:+d}"
    return NodeLabel(
        element,
        (
            ("element", element),
            ("charge", sign),
            ("aromatic", "true" if aromatic else "false"),
            ("hcount", hcount),
        ),
    )


def _parse_bracket(text: str, start: int) -> tuple[NodeLabel, int]:
    """Parse ``[...]`` beginning at ``text[start] == '['``; returns label and next index."""
    end = text.find("]", start)
    if end < 0:
        raise ParseError("unterminated bracket atom", start + 1)
    body = text[start + 1:end]
    col = start + 2
    if not body:
        raise ParseError("empty bracket atom", start + 1)
    i = 0
    if body[0].isdigit():
        raise ParseError("isotopes are not supported", col)
    element = None
    aromatic = False
    for sym in BRACKET_AROMATIC:
        if body.startswith(sym):
            element, aromatic = sym.capitalize(), True
            i = len(sym)
            break
    if element is None:
        if len(body) >= 2 and body[:2] in ELEMENTS and body[1].islower():
            element, i = body[:2], 2
        elif body[0] in ELEMENTS:
            element, i = body[0], 1
        else:
            raise ParseError(f"unknown element in bracket atom {body!r}", col)
    if i < len(body) and body[i] == "@":
        raise ParseError("stereo specifications are not supported", col + i)
    hcount = "0"
    if i < len(body) and body[i] == "H":
        i += 1
        digits = ""
        while i < len(body) and body[i].isdigit():
            digits += body[i]
            i += 1
        hcount = digits or "1"
    charge = 0
    if i < len(body) and body[i] in "+-":
        sign = 1 if body[i] == "+" else -1
        i += 1
        digits = ""
        while i < len(body) and body[i].isdigit():
            digits += body[i]
            i += 1
        if digits:
            charge = sign * int(digits)
        else:
            charge = sign
            while i < len(body) and body[i] == body[i - 1]:
                charge += sign
                i += 1
    if i != len(body):
        raise ParseError(f"unexpected {body[i]!r} in bracket atom", col + i)
    return _atom(element, aromatic, charge, hcount), end + 1


def parse_molecule(text: str, graph_id: str = "mol") -> LabeledGraph:
    nodes: list[NodeLabel] = []
    aromatic: list[bool] = []
    edges: dict[tuple[int, int], str] = {}
    prev: int | None = None
    pending: tuple[str, int] | None = None  # bond kind, column
    branches: list[tuple[int, int]] = []  # atom, column of '('
    rings: dict[int, tuple[int, str | None, int]] = {}

    def bond(a: int, b: int, kind: str | None, col: int) -> None:
        key = (min(a, b), max(a, b))
        if a == b:
            raise ParseError("ring bond closes on its own atom", col)
        if key in edges:
            raise ParseError("duplicate bond between the same two atoms", col)
        if kind is None:
            kind = "aromatic" if aromatic[a] and aromatic[b] else "single"
        edges[key] = kind

    if not text:
        raise ParseError("empty line notation", 1)
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        col = i + 1
        label = None
        if ch == "[":
            label, i = _parse_bracket(text, i)
        elif text.startswith(("Cl", "Br"), i):
            label = _atom(text[i:i + 2], False)
            i += 2
        elif ch in ORGANIC:
            label = _atom(ch, False)
            i += 1
        elif ch in AROMATIC:
            label = _atom(ch.upper(), True)
            i += 1
        elif ch in BOND_KINDS:
            if pending is not None:
                raise ParseError("two consecutive bond symbols", col)
            if prev is None:
                raise ParseError("bond symbol without a preceding atom", col)
            pending = (BOND_KINDS[ch], col)
            i += 1
            continue
        elif ch == "(":
            if prev is None:
                raise ParseError("branch without a preceding atom", col)
            if pending is not None:
                raise ParseError("bond symbol before '('", pending[1])
            if i + 1 < n and text[i + 1] == ")":
                raise ParseError("empty branch", col)
            branches.append((prev, col))
            i += 1
            continue
        elif ch == ")":
            if not branches:
                raise ParseError("unbalanced ')'", col)
            if pending is not None:
                raise ParseError("dangling bond symbol", pending[1])
            prev = branches.pop()[0]
            i += 1
            continue
        elif ch.isdigit() or ch == "%":
            if prev is None:
                raise ParseError("ring closure without a preceding atom", col)
            if ch == "%":
                digits = text[i + 1:i + 3]
                if len(digits) != 2 or not digits.isdigit():
                    raise ParseError("'%' must be followed by two digits", col)
                number = int(digits)
                i += 3
            else:
                number = int(ch)
                if number == 0:
                    raise ParseError("ring closure digit 0 is not supported", col)
                i += 1
            kind = pending[0] if pending else None
            pending = None
            if number in rings:
                other, open_kind, _ = rings.pop(number)
                if kind and open_kind and kind != open_kind:
                    raise ParseError(f"conflicting bond symbols on ring closure {number}", col)
                bond(other, prev, kind or open_kind, col)
            else:
                rings[number] = (prev, kind, col)
            continue
        elif ch in "@/\\":
            raise ParseError("stereo specifications are not supported", col)
        else:
            raise ParseError(f"unknown symbol {ch!r}", col)

        nodes.append(label)
        aromatic.append(label.attr("aromatic") == "true")
        idx = len(nodes) - 1
        if prev is not None:
            bond(prev, idx, pending[0] if pending else None, col)
        pending = None
        prev = idx

    if pending is not None:
        raise ParseError("dangling bond symbol", pending[1])
    if branches:
        raise ParseError("unbalanced '('", branches[-1][1])
    if rings:
        number, (_, _, col) = min(rings.items(), key=lambda kv: kv[1][2])
        raise ParseError(f"unclosed ring bond {number}", col)
    edge_list = [(u, v, EdgeLabel(kind)) for (u, v), kind in edges.items()]
    return LabeledGraph(graph_id, tuple(nodes), tuple(edge_list))


def _atom_text(label: NodeLabel) -> str:
    element = label.attr("element", label.kind)
    is_aromatic = label.attr("aromatic") == "true"
    charge = label.attr("charge", "0")
    hcount = label.attr("hcount", "default")
    sym = element.lower() if is_aromatic else element
    if hcount == "default":
        if charge != "0":
            raise ValueError(f"cannot write charged atom {label.display()} without an H count")
        if (is_aromatic and sym in AROMATIC) or (not is_aromatic and element in ORGANIC):
            return sym
        raise ValueError(f"atom {label.display()} needs brackets but has no H count")
    h = "" if hcount == "0" else ("H" if hcount == "1" else f"H{hcount}")
    q = "" if charge == "0" else charge
    return f"[{sym}{h}{q}]"


def write_molecule(g: LabeledGraph) -> str:
    """Serialize a connected parsed molecule; every bond symbol is written out."""
    if not g.nodes:
        return ""
    if g.n_components() != 1:
        raise ValueError("only connected molecules can be written")
    adjacency = g.adjacency
    order: list[int] = []
    parent: dict[int, int | None] = {0: None}
    children: dict[int, list[int]] = {}
    stack = [0]
    seen = set()
    while stack:
        u = stack.pop()
        if u in seen:
            continue
        seen.add(u)
        order.append(u)
        children[u] = []
        if parent[u] is not None:
            children[parent[u]].append(u)
        for w, _ in reversed(adjacency[u]):
            if w not in seen:
                parent[w] = u
                stack.append(w)
    rank = {v: i for i, v in enumerate(order)}
    tree = {(min(u, p), max(u, p)) for u, p in parent.items() if p is not None}
    ring_open: dict[int, list[tuple[int, str]]] = {}
    for u, v, e in g.edges:
        if (min(u, v), max(u, v)) in tree:
            continue
        first, last = (u, v) if rank[u] < rank[v] else (v, u)
        ring_open.setdefault(first, []).append((last, e.kind))

    free = list(range(1, 100))
    open_labels: dict[tuple[int, int], int] = {}

    def ring_text(num: int) -> str:
        return str(num) if num < 10 else f"%{num:02d}"

    def emit(u: int) -> str:
        out = [_atom_text(g.nodes[u])]
        for (a, b), num in sorted(open_labels.items(), key=lambda kv: kv[1]):
            if b == u:
                out.append(ring_text(num))
                del open_labels[(a, b)]
                free.append(num)
                free.sort()
        for v, kind in sorted(ring_open.get(u, []), key=lambda t: rank[t[0]]):
            num = free.pop(0)
            open_labels[(u, v)] = num
            out.append(BOND_SYMBOLS[kind] + ring_text(num))
        kids = sorted(children[u], key=rank.__getitem__)
        for k, c in enumerate(kids):
            piece = BOND_SYMBOLS[g.edge_kind(u, c)] + emit(c)
            out.append(piece if k == len(kids) - 1 else f"({piece})")
        return "".join(out)

    return emit(0)
