//! Turning raw text and tabular records into design matrices, labels and
//! feature groups.

pub mod dataset;
pub mod embedding;
pub mod group_file;
pub mod pipeline;
pub mod synth;
pub mod tabular;
pub mod text;

pub use dataset::{remove_features, DataBundle, PairedDataset};
pub use embedding::{embed_document, EmbeddingTable, GroupWeightTriple, TokenGroups};
pub use group_file::GroupFile;
pub use pipeline::{
    assign_random_splits, build_tabular_bundle, build_tabular_bundle_with_encoder, build_text_bundle,
    build_text_bundle_with_vocab, TabularBundle, TextBundle, TextRepresentation,
};
pub use synth::{
    bundle_to_corpus, spurious_agreement, synth_admission, synth_admission_table, synth_generate,
    AdmissionConfig, PlantedStructure, SynthConfig, SynthData,
};
pub use tabular::{
    encode_tabular, split_rows, ColumnKind, ColumnSpec, EncodedTable, TabularEncoder,
    TabularSchema, TabularSplits, TabularTable,
};
pub use text::{
    augment_with_counterfactuals, filter_kindle, read_rated_tsv, tokenize, vectorize_bow, Corpus,
    Document, RatedReview, SplitTag, Vocabulary,
};
