//! Text to vector: TF-IDF, averaged word vectors, sentence embeddings and
//! cosine similarity.

mod providers;
mod tfidf;
mod vector;

pub use providers::{
    average_word_embeddings, embed_batch, embed_sentence, sentence_provider, word_provider, AveragedEmbedding,
    EmbeddingKind, EmbeddingProvider, HashingSentenceEncoder, WordVectorTable,
};
pub use tfidf::{fit_tfidf, tfidf_transform, TfidfModel, TFIDF_FORMAT_VERSION};
pub use vector::{cosine_similarity, FeatureVector};
