"""Hybrid control flow graphs, networks, synchronized products, translation.

An hCFG is a location graph with a full ODE flow per location, closed guard
assertions on edges (with a total order among the edges leaving a location),
assignment lists on edges and on initialization, and a set of final
locations.  A location is left at the first instant any outgoing guard
holds; among simultaneously enabled guards the lowest-ordered edge wins.

Open hCFGs may leave some variables' dynamics to other components; a
network of open hCFGs composes into a single product hCFG over location
tuples, synchronizing on shared event names.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import programs
from .symbolic import (
    Assertion,
    CLOSED,
    BOTH,
    TRUE,
    Term,
    classify_topology,
    conj,
    eq,
    le,
    neg,
    parse_assertion,
    parse_term,
    satisfies,
    term_to_sexpr,
    to_sexpr,
)

Location = object  # str for components, tuple of str for products


@dataclass(frozen=True)
class Edge:
    source: Location
    event: str
    target: Location
    guard: Assertion
    assigns: tuple = ()  # ordered (var, Term) pairs


@dataclass(frozen=True)
class OpenHCFG:
    """A network component: flows may omit variables owned elsewhere."""

    name: str
    locations: tuple
    events: frozenset
    edges: Mapping[Location, tuple]  # source -> ordered Edge tuple
    variables: tuple
    flows: Mapping[Location, Mapping[str, Term]]
    init_location: Location
    init_assigns: tuple = ()

    def out_edges(self, loc: Location) -> tuple:
        return tuple(self.edges.get(loc, ()))

    def all_edges(self) -> list:
        return [e for loc in self.locations for e in self.out_edges(loc)]


@dataclass(frozen=True)
class HCFG(OpenHCFG):
    """A closed hCFG: flows cover all variables; has a final-location set."""

    final: frozenset = frozenset()


@dataclass(frozen=True)
class ProductHCFG(HCFG):
    # provenance: (source tuple, edge index) -> ((component idx, component edge), ...)
    provenance: Mapping[tuple, tuple] = field(default_factory=dict)


@dataclass(frozen=True)
class Network:
    components: tuple
    variables: tuple

    def __post_init__(self):
        seen = set()
        for c in self.components:
            for loc in c.locations:
                if loc in seen:
                    raise ValueError(f"duplicate location name {loc!r} across components")
                seen.add(loc)


# ---------------------------------------------------------------------------
# Validation and compatibility
# ---------------------------------------------------------------------------


@dataclass
class Report:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, msg: str) -> None:
        self.violations.append(msg)


def validate(g: OpenHCFG) -> Report:
    """Check the structural invariants; every problem becomes one report line."""
    r = Report()
    locs = set(g.locations)
    if g.init_location not in locs:
        r.add(f"init location {g.init_location!r} not among locations")
    if isinstance(g, HCFG):
        for l in g.final:
            if l not in locs:
                r.add(f"final location {l!r} not among locations")
    varset = set(g.variables)
    for l in g.locations:
        flow = g.flows.get(l, {})
        extra = set(flow) - varset
        if extra:
            r.add(f"flow at {l!r} mentions unknown variables {sorted(extra)}")
        if isinstance(g, HCFG) and set(flow) != varset:
            missing = sorted(varset - set(flow))
            r.add(f"incomplete flow at {l!r}: missing {missing}")
    for l, out in g.edges.items():
        if l not in locs:
            r.add(f"edge source {l!r} not among locations")
        for e in out:
            if e.source != l:
                r.add(f"edge {e.event!r} stored under wrong source {l!r}")
            if e.target not in locs:
                r.add(f"edge target {e.target!r} not among locations")
            if e.event not in g.events:
                r.add(f"edge event {e.event!r} not among declared events")
            if classify_topology(e.guard) not in (CLOSED, BOTH):
                r.add(f"guard not closed on edge {e.source!r} --{e.event}--> {e.target!r}")
            for v, _ in e.assigns:
                if v not in varset:
                    r.add(f"assignment to unknown variable {v!r} on event {e.event!r}")
    return r


def check_compatibility(n: Network) -> Report:
    """Appendix-style conditions: flows agree and jointly cover V; assigns agree."""
    r = Report()
    varset = set(n.variables)
    for comp in n.components:
        sub = validate(comp)
        for v in sub.violations:
            r.add(f"[{comp.name}] {v}")
    # flows: for every location tuple, duplicated right-hand sides must agree
    # and the union must cover all of V
    per_var_rhs: dict[str, dict] = {v: {} for v in varset}
    for comp in n.components:
        for l in comp.locations:
            for v, rhs in comp.flows.get(l, {}).items():
                per_var_rhs[v].setdefault(comp.name, {})[l] = rhs
    for tup in itertools.product(*[c.locations for c in n.components]):
        for v in n.variables:
            rhss = []
            for comp, l in zip(n.components, tup):
                rhs = comp.flows.get(l, {}).get(v)
                if rhs is not None:
                    rhss.append((comp.name, rhs))
            if not rhss:
                r.add(f"variable {v!r} has no flow at location tuple {tup!r}")
            elif any(rhs != rhss[0][1] for _, rhs in rhss[1:]):
                names = [name for name, _ in rhss]
                r.add(f"flow conflict on {v!r} at {tup!r} between {names}")
    # assignments: synchronizable edge tuples (and Init) must agree per variable
    events = set().union(*[c.events for c in n.components]) if n.components else set()
    for a in sorted(events):
        owners = [c for c in n.components if a in c.events]
        edge_lists = [[e for e in c.all_edges() if e.event == a] for c in owners]
        for combo in itertools.product(*edge_lists):
            assigned: dict[str, Term] = {}
            for comp, e in zip(owners, combo):
                for v, rhs in e.assigns:
                    prev = assigned.get(v)
                    if prev is not None and prev != rhs:
                        r.add(
                            f"assignment conflict on {v!r} for event {a!r}: "
                            f"{prev!r} vs {rhs!r}"
                        )
                    assigned[v] = rhs
    init_assigned: dict[str, Term] = {}
    for comp in n.components:
        for v, rhs in comp.init_assigns:
            if v in init_assigned and init_assigned[v] != rhs:
                r.add(f"Init assignment conflict on {v!r}")
            init_assigned[v] = rhs
    return r


# ---------------------------------------------------------------------------
# Synchronized product
# ---------------------------------------------------------------------------


def synchronized_product(n: Network, final: Iterable[tuple]) -> ProductHCFG:
    compat = check_compatibility(n)
    if not compat.ok:
        raise ValueError("incompatible network: " + "; ".join(compat.violations))
    comps = n.components
    tuples = list(itertools.product(*[c.locations for c in comps]))
    events = frozenset().union(*[c.events for c in comps]) if comps else frozenset()
    flows: dict[tuple, dict] = {}
    for tup in tuples:
        flow: dict[str, Term] = {}
        for comp, l in zip(comps, tup):
            flow.update(comp.flows.get(l, {}))
        flows[tup] = flow
    edge_map: dict[tuple, tuple] = {}
    provenance: dict[tuple, tuple] = {}
    # per-component edge order index, used for the product's edge order
    order_index = [
        {id(e): i for i, e in enumerate(c.all_edges())} for c in comps
    ]
    for tup in tuples:
        entries = []
        for a in events:
            owner_idx = [i for i, c in enumerate(comps) if a in c.events]
            local = [
                [e for e in comps[i].out_edges(tup[i]) if e.event == a] for i in owner_idx
            ]
            if any(not options for options in local):
                continue
            for combo in itertools.product(*local):
                target = list(tup)
                guard = TRUE
                assigns: list = []
                key = []
                for i, e in zip(owner_idx, combo):
                    target[i] = e.target
                    guard = conj(guard, e.guard)
                    assigns.extend(e.assigns)
                    key.append((i, order_index[i][id(e)]))
                entries.append(
                    (
                        (tuple(key), a),
                        Edge(tup, a, tuple(target), guard, tuple(assigns)),
                        tuple((i, e) for i, e in zip(owner_idx, combo)),
                    )
                )
        entries.sort(key=lambda item: item[0])
        edge_map[tup] = tuple(e for _, e, _ in entries)
        for idx, (_, _, prov) in enumerate(entries):
            provenance[(tup, idx)] = prov
    init = tuple(c.init_location for c in comps)
    init_assigns: list = []
    seen_init = set()
    for comp in comps:
        for v, rhs in comp.init_assigns:
            if v not in seen_init:
                init_assigns.append((v, rhs))
                seen_init.add(v)
    return ProductHCFG(
        name="*".join(c.name for c in comps),
        locations=tuple(tuples),
        events=events,
        edges=edge_map,
        variables=tuple(n.variables),
        flows=flows,
        init_location=init,
        init_assigns=tuple(init_assigns),
        final=frozenset(final),
        provenance=provenance,
    )


# ---------------------------------------------------------------------------
# Graph utilities
# ---------------------------------------------------------------------------


def reachable_and_acyclic(g: HCFG) -> tuple[frozenset, bool]:
    reachable = {g.init_location}
    frontier = [g.init_location]
    while frontier:
        l = frontier.pop()
        for e in g.out_edges(l):
            if e.target not in reachable:
                reachable.add(e.target)
                frontier.append(e.target)
    # DFS coloring on the reachable subgraph
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {l: WHITE for l in reachable}
    acyclic = True
    for root in reachable:
        if color[root] != WHITE:
            continue
        stack = [(root, iter(g.out_edges(root)))]
        color[root] = GRAY
        while stack:
            node, it = stack[-1]
            advanced = False
            for e in it:
                t = e.target
                if color[t] == GRAY:
                    acyclic = False
                elif color[t] == WHITE:
                    color[t] = GRAY
                    stack.append((t, iter(g.out_edges(t))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()
    return frozenset(reachable), acyclic


def topological_order(g: HCFG, reachable: Iterable[Location]) -> list:
    """Reachable locations ordered so every edge goes forward; requires acyclicity."""
    from graphlib import TopologicalSorter

    reach = set(reachable)
    deps: dict = {l: set() for l in reach}
    for l in reach:
        for e in g.out_edges(l):
            if e.target in reach:
                deps[e.target].add(l)
    return list(TopologicalSorter(deps).static_order())


def _loc_label(l: Location) -> str:
    if isinstance(l, tuple):
        return ",".join(str(x) for x in l)
    return str(l)


def export_dot(g: OpenHCFG) -> str:
    lines = [f'digraph "{g.name}" {{']
    for l in g.locations:
        flow = g.flows.get(l, {})
        flabel = "\\n".join(f"d{v}/dt = {rhs!r}" for v, rhs in sorted(flow.items()))
        flabel = flabel.replace("Term(", "").replace(")", "")
        shape = "doublecircle" if isinstance(g, HCFG) and l in g.final else "ellipse"
        lines.append(f'  "{_loc_label(l)}" [shape={shape}, label="{_loc_label(l)}\\n{flabel}"];')
    for l in g.locations:
        for e in g.out_edges(l):
            assigns = "; ".join(f"{v} := {rhs!r}" for v, rhs in e.assigns)
            assigns = assigns.replace("Term(", "").replace(")", "")
            label = e.event
            if e.guard != TRUE:
                label += f"\\n[{to_sexpr(e.guard)}]"
            if assigns:
                label += f"\\n{assigns}"
            lines.append(f'  "{_loc_label(e.source)}" -> "{_loc_label(e.target)}" [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Translation to hybrid programs
# ---------------------------------------------------------------------------

PC = "_loc"


def location_encoding(g: HCFG) -> dict:
    """Dense indices: the initial location first, final locations last."""
    nonfinal = [l for l in g.locations if l not in g.final]
    if g.init_location in set(nonfinal):
        nonfinal.remove(g.init_location)
        nonfinal.insert(0, g.init_location)
    finals = [l for l in g.locations if l in g.final]
    ordered = nonfinal + finals
    return {l: i for i, l in enumerate(ordered)}


def translate_to_program(g: HCFG, pc: str = PC) -> tuple:
    """The dispatch-loop program of the graph; returns (program, encoding)."""
    enc = location_encoding(g)
    n_nonfinal = len(g.locations) - len(g.final)
    pc_term = Term.var(pc)
    blocks: list = []
    for l in g.locations:
        if l in g.final:
            continue
        out = g.out_edges(l)
        dwell = programs.DWhile(
            conj(*[neg(e.guard) for e in out]),
            tuple(sorted(g.flows[l].items())),
        )
        dispatch: programs.Program = programs.Skip()
        for e in reversed(out):
            taken = programs.seq(
                *[programs.Assign(v, rhs) for v, rhs in e.assigns],
                programs.Assign(pc, Term.const(enc[e.target])),
            )
            dispatch = programs.If(e.guard, taken, dispatch)
        blocks.append((enc[l], programs.seq(dwell, dispatch)))
    body: programs.Program = programs.Skip()
    for idx, block in sorted(blocks, reverse=True):
        body = programs.If(eq(pc_term, Term.const(idx)), block, body)
    prog = programs.seq(
        programs.Assign(pc, Term.const(enc[g.init_location])),
        *[programs.Assign(v, rhs) for v, rhs in g.init_assigns],
        programs.While(le(pc_term, Term.const(n_nonfinal - 1)), body),
    )
    return prog, enc


# ---------------------------------------------------------------------------
# Direct product simulation (the cross-check route for the translated program)
# ---------------------------------------------------------------------------


@dataclass
class WalkResult:
    outcome: str  # converged | timeout
    location: Location
    store: dict
    time: float
    path: list = field(default_factory=list)  # (time, event, location) steps
    trace: list = field(default_factory=list)  # (time, store) samples
    simultaneous: list = field(default_factory=list)  # diagnostic records


def simulate_graph(g: HCFG, store0: Mapping[str, float], cfg: programs.SimCfg | None = None,
                   keep_trace: bool = True) -> WalkResult:
    """Walk the graph directly: integrate each location's flow until the
    first outgoing guard fires, take the lowest-ordered enabled edge, apply
    its assignments, repeat until a final location is reached."""
    cfg = cfg or programs.SimCfg()
    store = {k: float(v) for k, v in store0.items()}
    for v, rhs in g.init_assigns:
        store[v] = float(rhs.eval(store))
    loc = g.init_location
    t = 0.0
    path = [(t, "Init", loc)]
    trace = [(0.0, dict(store))] if keep_trace else []
    simultaneous: list = []
    while loc not in g.final:
        out = g.out_edges(loc)
        odes = tuple(sorted(g.flows[loc].items()))

        def any_guard(s):
            return any(satisfies(s, e.guard) for e in out)

        if not any_guard(store):
            # integrate until some guard first becomes true
            fired = False
            while t < cfg.horizon:
                h = min(cfg.dt, cfg.horizon - t)
                nxt = programs._rk4_step(store, odes, h)
                if not any_guard(nxt):
                    store, t = nxt, t + h
                    if keep_trace:
                        trace.append((t, dict(store)))
                    continue
                lo, hi = 0.0, h
                while hi - lo > cfg.event_tol:
                    mid = 0.5 * (lo + hi)
                    if any_guard(programs._rk4_step(store, odes, mid)):
                        hi = mid
                    else:
                        lo = mid
                store = programs._rk4_step(store, odes, hi)
                t += hi
                if keep_trace:
                    trace.append((t, dict(store)))
                fired = True
                break
            if not fired:
                return WalkResult("timeout", loc, store, t, path, trace, simultaneous)
        enabled = [e for e in out if satisfies(store, e.guard)]
        if len(enabled) > 1:
            simultaneous.append((t, loc, [e.event for e in enabled]))
        e = enabled[0]
        for v, rhs in e.assigns:
            store[v] = float(rhs.eval(store))
        loc = e.target
        path.append((t, e.event, loc))
        if keep_trace:
            trace.append((t, dict(store)))
    return WalkResult("converged", loc, store, t, path, trace, simultaneous)


# ---------------------------------------------------------------------------
# JSON model format
# ---------------------------------------------------------------------------


def _assigns_to_json(assigns: Sequence[tuple]) -> list:
    return [[v, term_to_sexpr(rhs)] for v, rhs in assigns]


def _assigns_from_json(data) -> tuple:
    return tuple((v, parse_term(text)) for v, text in data)


def component_to_json(c: OpenHCFG) -> dict:
    return {
        "name": c.name,
        "locations": list(c.locations),
        "events": sorted(c.events),
        "init": c.init_location,
        "init_assigns": _assigns_to_json(c.init_assigns),
        "flows": {
            l: {v: term_to_sexpr(rhs) for v, rhs in sorted(c.flows.get(l, {}).items())}
            for l in c.locations
        },
        "edges": [
            {
                "source": e.source,
                "event": e.event,
                "target": e.target,
                "guard": to_sexpr(e.guard),
                "assigns": _assigns_to_json(e.assigns),
            }
            for l in c.locations
            for e in c.out_edges(l)
        ],
    }


def component_from_json(data, variables: Sequence[str]) -> OpenHCFG:
    edges: dict = {l: [] for l in data["locations"]}
    for raw in data["edges"]:
        edges[raw["source"]].append(
            Edge(
                raw["source"],
                raw["event"],
                raw["target"],
                parse_assertion(raw["guard"]),
                _assigns_from_json(raw["assigns"]),
            )
        )
    return OpenHCFG(
        name=data["name"],
        locations=tuple(data["locations"]),
        events=frozenset(data["events"]),
        edges={l: tuple(es) for l, es in edges.items()},
        variables=tuple(variables),
        flows={
            l: {v: parse_term(text) for v, text in flow.items()}
            for l, flow in data["flows"].items()
        },
        init_location=data["init"],
        init_assigns=_assigns_from_json(data["init_assigns"]),
    )


def expand_predicate(pred: Mapping, n: Network) -> frozenset:
    """Expand an ``{"any_of": [{component: location, ...}, ...]}`` predicate
    into the matching set of product location tuples."""
    names = [c.name for c in n.components]
    out = set()
    for tup in itertools.product(*[c.locations for c in n.components]):
        for alt in pred.get("any_of", []):
            if all(tup[names.index(cname)] == lname for cname, lname in alt.items()):
                out.add(tup)
                break
    return frozenset(out)


def model_to_json(n: Network, final_pred: Mapping, unsafe_pred: Mapping,
                  safety: Assertion = TRUE, name: str = "") -> str:
    doc = {
        "name": name,
        "variables": list(n.variables),
        "components": [component_to_json(c) for c in n.components],
        "final": final_pred,
        "unsafe": unsafe_pred,
        "safety": to_sexpr(safety),
    }
    return json.dumps(doc, indent=2) + "\n"


def model_from_json(text: str):
    """Returns (network, final predicate, unsafe predicate, safety, name)."""
    doc = json.loads(text)
    variables = doc["variables"]
    comps = tuple(component_from_json(c, variables) for c in doc["components"])
    n = Network(components=comps, variables=tuple(variables))
    return n, doc["final"], doc["unsafe"], parse_assertion(doc["safety"]), doc.get("name", "")
