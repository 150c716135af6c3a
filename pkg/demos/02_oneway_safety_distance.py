"""One-way traffic: the synthesized condition equals the RSS safety distance.

Two vehicles drive the same direction on one lane.  The rear vehicle may
accelerate at up to a_max for the response time rho, then brakes at b_min;
the front vehicle brakes at b_max immediately.  The classical RSS distance

    d = v_r rho + a_max rho^2 / 2 + (v_r + a_max rho)^2 / (2 b_min)
        - v_f^2 / (2 b_max)          (clamped at zero)

is safe iff the gap y_f - y_r exceeds it.  This script synthesizes the
condition from the two-vehicle network and samples the agreement.
"""

import random
import time
from fractions import Fraction

from rssforge.scenarios import RssParams, build_oneway, drss
from rssforge.symbolic import satisfies, to_sexpr
from rssforge.synthesis import annotate

params = RssParams()  # rho = 0.3, a_max = 2, b_min = b_max = 5
scenario = build_oneway(params)
product = scenario.product()
print(f"product graph: {len(product.locations)} locations, "
      f"{len(product.all_edges())} edges")

started = time.monotonic()
report = annotate(product, scenario.safety, scenario.unsafe_tuples())
print(f"synthesis took {time.monotonic() - started:.2f} s, "
      f"{len(report.rss_dnf)} clauses:")
print(" ", to_sexpr(report.rss_condition)[:200], "...")

rng = random.Random(42)
mismatches = 0
N = 10_000
for _ in range(N):
    store = {
        "y_f": Fraction(rng.randint(0, 1000), 10),
        "y_r": Fraction(rng.randint(0, 1000), 10),
        "v_f": Fraction(rng.randint(0, 250), 10),
        "v_r": Fraction(rng.randint(0, 250), 10),
        "t_r": Fraction(0),
    }
    reference = store["y_f"] - store["y_r"] > drss(store["v_f"], store["v_r"], params)
    if satisfies(store, report.rss_condition) != reference:
        mismatches += 1

print(f"agreement with the closed-form distance: {N - mismatches}/{N}")
