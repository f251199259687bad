"""Property testers for exact pattern matching under a Hamming-distance gap.

A tester must answer yes when the pattern occurs exactly in the text and no
when every alignment has more than k mismatches; instances in between may get
either answer.  The package provides the i.i.d.-sampling folklore tester, a
periodic-sample fingerprint tester (with tolerant and reporting variants), an
adaptive tester, the mismatch-container machinery behind them, hard-instance
generators, and brute-force oracles for verification.
"""

from .adaptive import AdaptiveConfig, adaptive_test, multi_instance_filter
from .containers import (
    ContainerSet,
    SyncSet,
    container_above,
    container_below,
    k_mismatch_container,
    light_positions,
    mismatch_container,
    one_mismatch_container,
    sync_set,
    tau_runs,
    verify_container,
)
from .hashing import (
    FingerprintFn,
    ResidueSample,
    SlidingFingerprint,
    is_prime,
    mod_project,
    random_prime,
    sample_residues,
)
from .instances import (
    LabeledInstance,
    gen_bernoulli_family,
    gen_hybrid_family,
    gen_large_alphabet,
    gen_planted_noisy,
)
from .nonadaptive import (
    AnswerSet,
    ExecutionParams,
    TesterReport,
    choose_z,
    folklore_test,
    one_execution,
    tolerant_decide,
    tolerant_report,
)
from .strings import (
    Instance,
    QueryOracle,
    hamming_distance,
    mismatch_set,
    occ_exact,
    occ_hamming,
    occ_k_bruteforce,
    read_instance,
    write_instance,
)

__version__ = "0.1.0"
