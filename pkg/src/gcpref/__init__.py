"""Group preference queries over categorical attribute hierarchies.

Objects and users take values from per-attribute hierarchies. Each user
scores each object with a vector of per-attribute matching degrees; the
package finds the objects no rival beats for the whole group (or for a
given share of it), ranks them into tiers, and compares the result with
classic aggregation strategies.
"""

from .dominance import Counters, brute_force_cm, brute_force_pcm
from .hierarchy import Hierarchy, label, parse_hierarchy
from .model import DataError, Dataset, DegreeTable, degree_table, load_dataset, matching_vector
from .ranking import RankResult, StrategySpec, rank_cm, strategy_rank
from .skyline import bsl, p_bsl
from .spatial import build_index, ind, p_ind

__all__ = [
    "Counters",
    "DataError",
    "Dataset",
    "DegreeTable",
    "Hierarchy",
    "RankResult",
    "StrategySpec",
    "brute_force_cm",
    "brute_force_pcm",
    "bsl",
    "build_index",
    "degree_table",
    "ind",
    "label",
    "load_dataset",
    "matching_vector",
    "p_bsl",
    "p_ind",
    "parse_hierarchy",
    "rank_cm",
    "strategy_rank",
]
