//! Weighted hard voting: the 16 member-label patterns under the default
//! 13/6/6/1 weights, then a trained ensemble.

use pdvoice::data::synthetic::replicated_voice_like;
use pdvoice::voting::{train_voting, vote, vote_score, TieBreak, VotingConfig, MEMBER_NAMES};

fn main() -> pdvoice::Result<()> {
    let weights = [13, 6, 6, 1];
    println!("{:?} weights {weights:?}", MEMBER_NAMES);
    for pattern in 0..16u8 {
        let labels: Vec<u8> = (0..4).map(|i| (pattern >> (3 - i)) & 1).collect();
        let (label, tie) = vote(&labels, &weights, TieBreak::PositiveClass)?;
        println!(
            "{labels:?} -> {label} (share {:.3}){}",
            vote_score(&labels, &weights)?,
            if tie { "  tie" } else { "" }
        );
    }

    let ds = replicated_voice_like(5);
    let model = train_voting(&ds.feature_matrix(), &ds.labels(), &VotingConfig::default())?;
    let pred = model.predict(&ds.feature_matrix())?;
    println!("trained ensemble: {} tied rows of {}", pred.tie_count(), ds.len());
    Ok(())
}
