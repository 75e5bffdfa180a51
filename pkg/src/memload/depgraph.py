"""Per-sentence dependency graphs over linear token positions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .conllu import SentenceRecord


class GraphError(ValueError):
    """Structural problem that prevents building a graph."""


class DegenerateSentenceError(GraphError):
    pass


@dataclass(frozen=True)
class DepGraph:
    """Dependency tree; positions are 1-based, ``head[i - 1]`` governs token i.

    Root attachments (head 0) are not arcs: there is no virtual root node.
    """

    upos: tuple[str, ...]
    deprel: tuple[str, ...]
    head: tuple[int, ...]
    root: int
    arcs: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        arcs = tuple((h, d) for d, h in enumerate(self.head, start=1) if h != 0)
        object.__setattr__(self, "arcs", arcs)

    @property
    def n(self) -> int:
        return len(self.head)

    @classmethod
    def from_heads(
        cls,
        heads: Sequence[int],
        upos: Sequence[str] | None = None,
        deprel: Sequence[str] | None = None,
    ) -> "DepGraph":
        n = len(heads)
        if n == 0:
            raise DegenerateSentenceError("empty sentence")
        for i, h in enumerate(heads, start=1):
            if not 0 <= h <= n:
                raise GraphError(f"head of token {i} is {h}, outside 0..{n}")
        roots = [i for i, h in enumerate(heads, start=1) if h == 0]
        if not roots:
            raise DegenerateSentenceError("no token attaches to the root")
        upos = tuple(upos) if upos is not None else ("unknown",) * n
        deprel = tuple(deprel) if deprel is not None else ("unknown",) * n
        if len(upos) != n or len(deprel) != n:
            raise GraphError("label arrays do not match the number of heads")
        return cls(upos=upos, deprel=deprel, head=tuple(heads), root=roots[0])


def build_graph(record: SentenceRecord) -> DepGraph:
    """Build the graph of a parsed sentence; root is the first head-0 token."""
    toks = record.tokens
    for i, t in enumerate(toks, start=1):
        if t.id != i:
            raise GraphError(f"{record.sent_id}: token ids are not contiguous at {t.id}")
    try:
        return DepGraph.from_heads(
            [t.head for t in toks], [t.upos for t in toks], [t.deprel for t in toks]
        )
    except GraphError as exc:
        raise type(exc)(f"{record.sent_id}: {exc}") from None


@dataclass
class ValidationReport:
    roots: list[int]
    cycles: list[list[int]]
    self_loops: list[int]

    @property
    def multi_root(self) -> bool:
        return len(self.roots) > 1

    @property
    def no_root(self) -> bool:
        return not self.roots

    @property
    def ok(self) -> bool:
        return not (self.multi_root or self.no_root or self.cycles or self.self_loops)

    @property
    def findings(self) -> list[str]:
        out = []
        if self.no_root:
            out.append("no root")
        if self.multi_root:
            out.append(f"multiple roots at {self.roots}")
        for c in self.cycles:
            out.append(f"cycle through {c}")
        for s in self.self_loops:
            out.append(f"self-loop at {s}")
        return out


def find_issues(heads: Sequence[int]) -> ValidationReport:
    """Roots, self-loops and cycles of a head array (1-based positions)."""
    n = len(heads)
    roots = [i for i, h in enumerate(heads, start=1) if h == 0]
    loops = [i for i, h in enumerate(heads, start=1) if h == i]
    # follow head links; a walk that revisits a node on its own path is a cycle
    state = [0] * (n + 1)  # 0 unseen, 1 on current path, 2 done
    cycles = []
    for start in range(1, n + 1):
        path = []
        node = start
        while 1 <= node <= n and state[node] == 0:
            state[node] = 1
            path.append(node)
            node = heads[node - 1]
        if 1 <= node <= n and state[node] == 1:
            cyc = path[path.index(node):]
            if len(cyc) > 1:
                cycles.append(sorted(cyc))
        for p in path:
            state[p] = 2
    return ValidationReport(roots, cycles, loops)


def validate(graph: DepGraph | Sequence[int], strict: bool = False) -> ValidationReport:
    """Report multiple roots, cycles and self-loops.

    In strict mode any finding raises :class:`GraphError` instead.
    Accepts a graph or a bare head array (for pathologies that
    :func:`build_graph` would reject outright).
    """
    heads = graph.head if isinstance(graph, DepGraph) else list(graph)
    report = find_issues(heads)
    if strict and not report.ok:
        raise GraphError("; ".join(report.findings))
    return report


def head_positions(graph: DepGraph) -> set[int]:
    return {h for h, _ in graph.arcs}
