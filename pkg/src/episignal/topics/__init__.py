from .autoencoder import Autoencoder, autoencoder_fit
from .cluster import ClusterError, KMeansResult, kmeans, project_2d, silhouette
from .coherence import coherence, per_topic_coherence, umass
from .corpus import Corpus, TokenizedTweet, compute_tfidf, tfidf_weights
from .cte import (DayTopics, TopicCluster, TopicSettings, TuneResult, cte_concat, derive_seed,
                  extract_topics, model_day, tune_hyperparams)
from .embedding import EmbeddingError, HashedNgramEmbedder, PrecomputedEmbeddings, embed
from .lda import LdaError, LdaModel, lda_fit, quantize

__all__ = [
    "Autoencoder", "autoencoder_fit", "ClusterError", "KMeansResult", "kmeans", "project_2d",
    "silhouette", "coherence", "per_topic_coherence", "umass", "Corpus", "TokenizedTweet",
    "compute_tfidf", "tfidf_weights", "DayTopics", "TopicCluster", "TopicSettings", "TuneResult",
    "cte_concat", "derive_seed", "extract_topics", "model_day", "tune_hyperparams",
    "EmbeddingError", "HashedNgramEmbedder", "PrecomputedEmbeddings", "embed", "LdaError",
    "LdaModel", "lda_fit", "quantize",
]
