from .analysis import FertilityReport, derive_candidates, extend_vocab, fertility
from .bpe import TokenizerModel, bpe_tokenize
from .stats import (QualityReport, ShiftReport, average_ranks, cosine, kolmogorov_sf, ks_lottery,
                    ks_statistic, ks_two_sample, retrieval_r_at_1, spearman)

__all__ = [
    "FertilityReport", "QualityReport", "ShiftReport", "TokenizerModel", "average_ranks",
    "bpe_tokenize", "cosine", "derive_candidates", "extend_vocab", "fertility", "kolmogorov_sf",
    "ks_lottery", "ks_statistic", "ks_two_sample", "retrieval_r_at_1", "spearman",
]
