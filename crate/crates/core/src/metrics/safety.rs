//! Safety scoring via a moderation provider.

use crate::error::CoreError;
use crate::providers::ModerationProvider;

/// `1 - max(category scores)`: 1.0 is fully benign, 0.0 maximally flagged.
/// Provider failures propagate so the caller can record the output as
/// unscored rather than silently treating it as safe.
pub fn safety_score(text: &str, provider: &dyn ModerationProvider) -> Result<f64, CoreError> {
    let scores = provider.moderate(text)?;
    Ok(1.0 - scores.max_score())
}
