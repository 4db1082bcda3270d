//! Deterministic train/test partitioning.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::skeleton::{MotionSequence, Split};

fn check_fraction(test_fraction: f64) -> Result<()> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    Ok(())
}

/// Stratified split: within each label group the requested fraction of
/// sequences (rounded, at least one) is held out for testing. Shuffling is
/// seeded, so the same inputs always produce the same partition.
pub fn stratified_split(
    sequences: &[MotionSequence],
    test_fraction: f64,
    seed: u64,
) -> Result<Split> {
    check_fraction(test_fraction)?;
    if sequences.len() < 2 {
        return Err(Error::Validation(
            "need at least 2 sequences to split".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, seq) in sequences.iter().enumerate() {
        let code = seq.label.code();
        match groups.iter_mut().find(|(c, _)| *c == code) {
            Some((_, v)) => v.push(i),
            None => groups.push((code, vec![i])),
        }
    }
    groups.sort_by_key(|(c, _)| *c);

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (_, mut idxs) in groups {
        idxs.shuffle(&mut rng);
        let n_test = ((idxs.len() as f64 * test_fraction).round() as usize)
            .clamp(1, idxs.len().saturating_sub(1).max(1));
        test.extend_from_slice(&idxs[..n_test]);
        train.extend_from_slice(&idxs[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    let split = Split { train, test };
    split.validate(sequences.len())?;
    Ok(split)
}

/// Subject-exclusive split: whole subjects are held out so no person appears
/// on both sides. Subjects are shuffled and assigned to the test side until
/// it holds at least the requested fraction of sequences.
pub fn subject_split(
    sequences: &[MotionSequence],
    test_fraction: f64,
    seed: u64,
) -> Result<Split> {
    check_fraction(test_fraction)?;
    let mut subjects: Vec<&str> = Vec::new();
    for seq in sequences {
        if !subjects.contains(&seq.subject_id.as_str()) {
            subjects.push(&seq.subject_id);
        }
    }
    if subjects.len() < 2 {
        return Err(Error::Validation(
            "subject split needs at least 2 distinct subjects".into(),
        ));
    }
    subjects.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    subjects.shuffle(&mut rng);

    let target = (sequences.len() as f64 * test_fraction).round() as usize;
    let mut test_subjects: Vec<&str> = Vec::new();
    let mut held = 0usize;
    for &s in &subjects {
        if held >= target.max(1) || test_subjects.len() + 1 == subjects.len() {
            break;
        }
        held += sequences.iter().filter(|q| q.subject_id == s).count();
        test_subjects.push(s);
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, seq) in sequences.iter().enumerate() {
        if test_subjects.contains(&seq.subject_id.as_str()) {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    let split = Split { train, test };
    split.validate(sequences.len())?;
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{ActionKind, Label, SkeletonFrame, N_JOINTS};

    fn seq(subject: &str, label: Label) -> MotionSequence {
        let frame = |t: f64| SkeletonFrame {
            t,
            xyz: [[0.0; 3]; N_JOINTS],
        };
        MotionSequence {
            frames: vec![frame(0.0), frame(0.1)],
            label,
            action: ActionKind::TouchMouth,
            subject_id: subject.into(),
            view_id: 0,
            repetition: 0,
            fps: 30.0,
            preprocessed: false,
        }
    }

    fn corpus() -> Vec<MotionSequence> {
        let mut v = Vec::new();
        for s in 0..10 {
            for label in Label::ALL {
                for _ in 0..5 {
                    v.push(seq(&format!("S{s:02}"), label));
                }
            }
        }
        v
    }

    #[test]
    fn stratified_preserves_label_ratio() {
        let data = corpus();
        let split = stratified_split(&data, 0.2, 7).unwrap();
        for label in Label::ALL {
            let in_test = split
                .test
                .iter()
                .filter(|&&i| data[i].label == label)
                .count();
            // each label has 50 sequences, 20% of which is 10
            assert_eq!(in_test, 10, "label {label:?}");
        }
        split.validate(data.len()).unwrap();
    }

    #[test]
    fn stratified_is_deterministic_per_seed() {
        let data = corpus();
        let a = stratified_split(&data, 0.2, 42).unwrap();
        let b = stratified_split(&data, 0.2, 42).unwrap();
        let c = stratified_split(&data, 0.2, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn subject_split_is_exclusive() {
        let data = corpus();
        let split = subject_split(&data, 0.2, 3).unwrap();
        let train_subjects: Vec<&str> = split
            .train
            .iter()
            .map(|&i| data[i].subject_id.as_str())
            .collect();
        for &i in &split.test {
            assert!(!train_subjects.contains(&data[i].subject_id.as_str()));
        }
        assert!(!split.test.is_empty());
        assert!(!split.train.is_empty());
    }

    #[test]
    fn bad_fraction_is_a_config_error() {
        let data = corpus();
        assert!(stratified_split(&data, 0.0, 1).is_err());
        assert!(stratified_split(&data, 1.0, 1).is_err());
    }
}
