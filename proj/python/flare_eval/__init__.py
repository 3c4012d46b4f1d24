"""Python surface of the segmentation benchmark core.

The heavy lifting (NIfTI I/O, exact distance transforms, AUC reductions,
rank aggregation, bootstrap stability) lives in the compiled ``_flare``
extension; this package just re-exports it.
"""

try:
    from flare_eval._flare import *  # noqa: F401,F403  (installed layout)
    from flare_eval._flare import __doc__ as _core_doc
except ImportError:  # pragma: no cover - dev build tree layout
    from _flare import *  # noqa: F401,F403
    from _flare import __doc__ as _core_doc

__all__ = [
    "LabelVolume",
    "load_volume",
    "write_volume",
    "to_canonical_ras",
    "organ_mask",
    "organ_names",
    "dsc",
    "nsd",
    "distance_to_mask",
    "organ_volume_cm3",
    "pearson_r",
    "auc_gpu",
    "auc_cpu",
    "PENALTY",
    "rank_leaderboard",
    "kendall_tau",
    "wilcoxon_signed_rank",
    "bootstrap_rankings",
    "ConfigError",
    "DataError",
]
