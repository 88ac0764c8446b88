"""Differentially private tabular releases via individual-ranking
microaggregation, with calibrated-noise baselines and utility metrics."""

from .data import (
    AttributeSchema,
    DataError,
    Dataset,
    NeighborPair,
    Schema,
    SchemaError,
    infer_numeric_bounds,
    load_dataset,
    load_schema,
    neighbor_pair,
    write_dataset,
)
from .harness import MechanismConfig, SweepSpec, execute_release, measure, run_release, run_sweep
from .mechanisms import (
    METHODS,
    BucketStat,
    DpCheckReport,
    PrivacyBudget,
    attribute_substream,
    dp_property_check,
    exponential_mechanism_centroid,
    ir_dp_release,
    ir_only_release,
    laplace_from_uniform,
    laplace_sample,
    mv_dp_release,
    mv_only_release,
    noise_scale,
    plain_laplace_release,
)
from .metrics import MetricConfig, UtilityReport, jsd, relative_error, variance_delta
from .microagg import (
    ClusterPlan,
    MultivariatePlan,
    categorical_order_key,
    individual_ranking,
    multivariate_baseline,
)
from .oracle import (
    Lemma1Report,
    SensitivityProbe,
    exact_dp_ratio,
    exact_expmech_distribution,
    lemma1_check,
)
from .taxonomy import (
    MarginalityTable,
    Taxonomy,
    TaxonomyError,
    load_taxonomy,
    marginality,
    marginality_centroid,
    marginality_table,
    spanned_subtree,
)

__version__ = "0.1.0"
