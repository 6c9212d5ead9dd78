"""Envy-free fair division: preference oracles, the test map and its residual search."""
from .ak import (AKResult, PartitionBalanceError, PartitionOracle, ak_reduce, any_nonempty, contains_point,
                 is_partition_balanced, longest_piece, partition_equivalent, preferred_safes, signed_measure,
                 solve_ak, threshold_or_empty, well_definedness_violations)
from .preferences import (ImproperPreferenceError, PreferenceMatrix, PreferenceOracle, check_equivariant,
                          check_proper, contains_point_preference, family_of, fewest_pieces_preference,
                          length_threshold_preference, longest_preference, measure_preference)
from .solver import (BirkhoffError, EnvyFreeResult, ScoreMatrix, SolverConfig, birkhoff_permutation,
                     preference_scores, solve_envy_free, solve_envy_free_binary, solve_envy_free_equicardinal,
                     test_map)
