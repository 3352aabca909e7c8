use crate::lexicon::split_by_spatial_cue;

/// Text → text projections isolating the spatial or the semantic part of a
/// question or description.
pub trait MaskingView: Send + Sync {
    fn id(&self) -> String;
    fn spatial_view(&self, text: &str) -> String;
    fn semantic_view(&self, text: &str) -> String;
}

/// Sentence-level split on the spatial cue lexicon.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexiconMasker;

impl MaskingView for LexiconMasker {
    fn id(&self) -> String {
        "lexicon-sentence".to_string()
    }

    fn spatial_view(&self, text: &str) -> String {
        split_by_spatial_cue(text).0
    }

    fn semantic_view(&self, text: &str) -> String {
        split_by_spatial_cue(text).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::sentences;

    #[test]
    fn views_partition_sentences() {
        let text = "Two blocks from the subway exit. Amazing waffles! Staff were rude; walking distance to the park.";
        let m = LexiconMasker;
        let sp = m.spatial_view(text);
        let se = m.semantic_view(text);
        assert_eq!(sp, "Two blocks from the subway exit. walking distance to the park.");
        assert_eq!(se, "Amazing waffles! Staff were rude;");
        let all = sentences(text);
        for s in sentences(&sp).into_iter().chain(sentences(&se)) {
            assert!(all.contains(&s), "{s}");
        }
    }

    #[test]
    fn empty_text_gives_empty_views() {
        assert_eq!(LexiconMasker.spatial_view(""), "");
        assert_eq!(LexiconMasker.semantic_view("  "), "");
    }
}
