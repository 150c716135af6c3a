"""rssforge: RSS-condition synthesis over networks of hybrid control flow graphs.

Submodules:

* :mod:`rssforge.symbolic` — exact multivariate polynomial terms and
  first-order assertions over the reals.
* :mod:`rssforge.flows` — closed-form solutions of nilpotent affine ODEs.
* :mod:`rssforge.qe` — sign-set DNF normal form and virtual-substitution
  quantifier elimination up to degree two.
* :mod:`rssforge.programs` — hybrid programs (imperative + dwhile) with a
  numeric interpreter and a falsifier.
* :mod:`rssforge.hcfg` — hybrid control flow graphs, networks, the
  synchronized product, and translation to hybrid programs.
* :mod:`rssforge.synthesis` — backward Hoare-annotation synthesis of RSS
  conditions, independent obligation checking, vacuity detection.
* :mod:`rssforge.smt` — satisfiability/validity checking via an internal
  decision engine or any external SMT-LIB v2 solver.
* :mod:`rssforge.smtsolver` — a bundled SMT-LIB v2 console.
* :mod:`rssforge.scenarios` — the built-in one-way-traffic and
  intersection models plus RSS distance formulas.
* :mod:`rssforge.sim` — concrete-instance simulation and the grid
  experiment harness.
* :mod:`rssforge.cli` — the ``rssforge`` command-line front end.
"""

__version__ = "0.1.0"
