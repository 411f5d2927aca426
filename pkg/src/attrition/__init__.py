"""Student attrition prediction from course grades.

Encode grades, cluster students with K-means, predict graduation from
co-cluster membership or logistic regression, and rank the courses whose
grades separate the clusters most.
"""

from .cluster import KMeans, KMeansConfig, KMeansModel, ch_index, kmeans_fit, select_k
from .domain import (
    Course,
    CurriculumSpec,
    GradeMatrix,
    LetterGrade,
    StudentRecord,
    build_matrix,
    encode_grade,
    subset_first_k,
)
from .evaluation import compare_classifiers, metrics_from_counts, roc_from_scores
from .exceptions import AttritionError, ConfigError, DataError, DegenerateDataError
from .ingest import read_cohort, read_curriculum, write_cohort, write_curriculum
from .insight import bottleneck_rank, cluster_profile, early_warning_features
from .predict import ClusterClassifier, LogisticModel
from .synth import CohortSpec, default_department_spec, generate_cohort

__version__ = "0.1.0"

__all__ = [
    "AttritionError",
    "ClusterClassifier",
    "CohortSpec",
    "ConfigError",
    "Course",
    "CurriculumSpec",
    "DataError",
    "DegenerateDataError",
    "GradeMatrix",
    "KMeans",
    "KMeansConfig",
    "KMeansModel",
    "LetterGrade",
    "LogisticModel",
    "StudentRecord",
    "bottleneck_rank",
    "build_matrix",
    "ch_index",
    "cluster_profile",
    "compare_classifiers",
    "default_department_spec",
    "early_warning_features",
    "encode_grade",
    "generate_cohort",
    "kmeans_fit",
    "metrics_from_counts",
    "read_cohort",
    "read_curriculum",
    "roc_from_scores",
    "select_k",
    "subset_first_k",
    "write_cohort",
    "write_curriculum",
]
