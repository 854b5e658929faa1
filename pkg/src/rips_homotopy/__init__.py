"""Rips and degree-Rips filtrations, their homotopy invariants and stability certificates."""
from .errors import (BudgetExceeded, HypothesisError, InconsistencyError, RipsHomotopyError,
                     ValidationError)
from .filtration import (BifilteredComplex, ComplexSlice, FilteredComplex, PhaseGrid, build_bifiltered,
                         build_rips, phase_grid, poset_at)
from .invariants import (Abelianization, GroupoidPresentation, SliceHomology, abelianized_pi1,
                         groupoid_presentation, homology_ranks, induced_homology_map, integral_h1,
                         order_complex, pi0)
from .metric import (MetricPoints, SubsetPair, config_hausdorff_lt, from_distance_matrix,
                     from_euclidean, hausdorff, lemma3_check, load_metric)
from .stability import (InterleavingCertificate, blumberg_lesnick, build_degree_retraction,
                        build_retraction, phase_gap_check, verify_interleaving)
from .systems import (SetSystem, SystemMap, VecSystem, compose, compose_bound_check,
                      controlled_equivalence_radius, glue_complex_systems, is_r_epi, is_r_iso,
                      is_r_mono, pushout_set_systems, shift_index)

__all__ = [
    "BudgetExceeded", "HypothesisError", "InconsistencyError", "RipsHomotopyError",
    "ValidationError", "BifilteredComplex", "ComplexSlice", "FilteredComplex", "PhaseGrid",
    "build_bifiltered", "build_rips", "phase_grid", "poset_at", "Abelianization",
    "GroupoidPresentation", "SliceHomology", "abelianized_pi1", "groupoid_presentation",
    "homology_ranks", "induced_homology_map", "integral_h1", "order_complex", "pi0",
    "MetricPoints", "SubsetPair", "config_hausdorff_lt", "from_distance_matrix", "from_euclidean",
    "hausdorff", "lemma3_check", "load_metric", "InterleavingCertificate", "blumberg_lesnick",
    "build_degree_retraction", "build_retraction", "phase_gap_check", "verify_interleaving",
    "SetSystem", "SystemMap", "VecSystem", "compose", "compose_bound_check",
    "controlled_equivalence_radius", "glue_complex_systems", "is_r_epi", "is_r_iso", "is_r_mono",
    "pushout_set_systems", "shift_index",
]
