import pytest

from gtlc import frontend
from gtlc.bench import corpus_dir

# The four-module boundary program used throughout: a typed identity, a
# client that uses it correctly, one that does not, and an entry point.
ID_BOUNDARY = """\
(module t1 (-> Int Int) (λ (x : Int) x))
(module u1 (require t1) (t1 5))
(module u2 (require t1) (λ (_) (t1 #f)))
(module main (require u2) (u2 #f))
"""

# Its compilation into the contract core.
ID_BOUNDARY_CORE = """\
(let [t1 (λ (x) x)]
  (let [u1 (let [t1 (mon (t1 u1) (-> int? int?) t1)] (t1 5))]
    (let [u2 (let [t1 (mon (t1 u2) (-> int? int?) t1)] (λ (_) (t1 #f)))]
      (let [main (u2 #f)]
        main))))
"""

# The same program after one module body is kept and the rest are opaque.
ID_BOUNDARY_SLICE_U1 = """\
(module t1 (-> Int Int) opaque)
(module u1 (require t1) (t1 5))
(module u2 (require t1) opaque)
(module main (require u2) opaque)
"""

ID_BOUNDARY_SLICE_U1_CORE = """\
(let [t1 opaque]
  (let [u1 (let [t1 (mon (t1 u1) (-> int? int?) t1)] (t1 5))]
    (let [u2 (let [t1 (mon (t1 u2) (-> int? int?) t1)] opaque)]
      (let [main opaque]
        main))))
"""

# What the optimizer must produce from ID_BOUNDARY: the t1/u1 boundary is
# erased entirely, and u2's boundary keeps only the domain obligation.
ID_BOUNDARY_OPTIMIZED_CORE = """\
(let [t1 (λ (x) x)]
  (let [u1 (t1 5)]
    (let [u2 (let [t1 (mon (t1 u2) (-> int? any/c) t1)] (λ (_) (t1 #f)))]
      (let [main (u2 #f)]
        main))))
"""


def parse_ok(text):
    program, diags = frontend.parse_program(text)
    assert program is not None and not diags, diags
    wf = frontend.check_wellformed(program)
    assert not wf, wf
    return program


@pytest.fixture(scope="session")
def id_boundary():
    return parse_ok(ID_BOUNDARY)


@pytest.fixture(scope="session")
def corpus_path():
    path = corpus_dir()
    assert path.is_dir()
    return path
