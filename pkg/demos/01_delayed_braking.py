"""A single vehicle rolling toward a wall: model, simulate, synthesize.

The vehicle cruises at constant speed for the response time rho, then brakes
at rate b until standstill.  The wall sits at x = 0 and touching it counts as
a crash.  The exact condition for staying clear of the wall from initial
position x < 0 and speed v >= 0 is

    x + v * rho + v^2 / (2 b)  <  0

and the synthesizer recovers precisely that from the graph.
"""

from fractions import Fraction

from rssforge.hcfg import HCFG, Edge, export_dot, simulate_graph
from rssforge.symbolic import TRUE, Term, format_term, ge, le, satisfies, to_sexpr
from rssforge.synthesis import annotate

RHO = Fraction(3, 10)
B = 5

x, v, t = Term.var("x"), Term.var("v"), Term.var("t")

graph = HCFG(
    name="delayed-braking",
    locations=("Cruise", "Brake", "Stop", "Hit"),
    events=frozenset({"Touch", "React", "Halt"}),
    edges={
        "Cruise": (
            Edge("Cruise", "Touch", "Hit", ge(x, 0)),
            Edge("Cruise", "React", "Brake", ge(t, RHO)),
        ),
        "Brake": (
            Edge("Brake", "Touch", "Hit", ge(x, 0)),
            Edge("Brake", "Halt", "Stop", le(v, 0)),
        ),
    },
    variables=("t", "v", "x"),
    flows={
        "Cruise": {"t": Term.const(1), "v": Term.const(0), "x": v},
        "Brake": {"t": Term.const(1), "v": Term.const(-B), "x": v},
        "Stop": {"t": Term.const(1), "v": Term.const(0), "x": Term.const(0)},
        "Hit": {"t": Term.const(1), "v": Term.const(0), "x": Term.const(0)},
    },
    init_location="Cruise",
    init_assigns=(("t", Term.const(0)),),
    final=frozenset({"Stop"}),
)

print(export_dot(graph))

# --- a couple of concrete runs ------------------------------------------------

for x0 in (-15.0, -12.0):
    run = simulate_graph(graph, {"x": x0, "v": 10.0, "t": 0.0})
    print(f"from x={x0:6.1f} at 10 m/s -> {run.location:5s} "
          f"after {run.time:.3f} s at x={run.store['x']:.3f}")

# --- synthesis ------------------------------------------------------------------

report = annotate(graph, TRUE, frozenset({"Hit"}))
print("\nsynthesized condition (over the initial x, v):")
print(" ", to_sexpr(report.rss_condition))

# cross-check against the closed form on a few states
for x0, v0 in ((-14, 10), (-13, 10), (-12, 10), (-1, 0), (0, 0)):
    got = satisfies({"x": x0, "v": v0, "t": 0}, report.rss_condition)
    want = x0 + v0 * RHO + Fraction(v0) ** 2 / (2 * B) < 0
    marker = "ok" if got == want else "MISMATCH"
    print(f"  x={x0:4d} v={v0:3d}: condition={got!s:5s} closed-form={want!s:5s} {marker}")
