//! Shared inputs for the benchmarks.

use georag_core::synth::synth_city;
use georag_core::{Corpus, HashEmbedder, LexiconMasker, QaPair};

/// The generated benchmark city, ingested with the hash embedder.
pub fn city(neighborhoods: usize) -> (Corpus, Vec<QaPair>) {
    let city = synth_city(7, neighborhoods);
    let corpus = Corpus::build(city.pois, city.gazetteer, &HashEmbedder::default(), &LexiconMasker)
        .expect("generated city is valid");
    (corpus, city.qa)
}
