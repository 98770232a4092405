use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EvalError;
use crate::corpus::Label;

/// Fold index for every row of a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        self.fold_of.iter().for_each(|&f| sizes[f] += 1);
        sizes
    }
}

/// Shuffles each class with a seeded generator, then deals positives and
/// then negatives round-robin with one running counter. Fold sizes and
/// per-fold class counts each differ by at most one.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Result<FoldAssignment, EvalError> {
    let n = labels.len();
    if k < 2 || n < k {
        return Err(EvalError::BadK { k, n });
    }
    let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i].is_positive()).collect();
    let mut neg: Vec<usize> = (0..n).filter(|&i| !labels[i].is_positive()).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(EvalError::SingleClass {
            n_pos: pos.len(),
            n_neg: neg.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let mut fold_of = vec![0; n];
    for (slot, &i) in pos.iter().chain(&neg).enumerate() {
        fold_of[i] = slot % k;
    }
    let folds = FoldAssignment { k, seed, fold_of };

    for f in 0..k {
        let train = folds.train_indices(f);
        let p = train.iter().filter(|&&i| labels[i].is_positive()).count();
        if p == 0 || p == train.len() {
            return Err(EvalError::SingleClassTrainingSplit { fold: f, k });
        }
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Negative as N, Positive as P};

    #[test]
    fn reference_cohort_split() {
        let mut labels = vec![P; 253];
        labels.extend(vec![N; 855]);
        let f = stratified_folds(&labels, 5, 42).unwrap();
        assert_eq!(f.fold_sizes(), vec![222, 222, 222, 221, 221]);
        for fold in 0..5 {
            let p = f
                .test_indices(fold)
                .iter()
                .filter(|&&i| labels[i].is_positive())
                .count();
            assert!(p == 50 || p == 51);
        }
    }

    #[test]
    fn two_folds_of_four() {
        let labels = [P, N, P, N];
        let f = stratified_folds(&labels, 2, 7).unwrap();
        for fold in 0..2 {
            let t = f.test_indices(fold);
            assert_eq!(t.len(), 2);
            assert_eq!(t.iter().filter(|&&i| labels[i].is_positive()).count(), 1);
        }
    }

    #[test]
    fn deterministic_by_seed() {
        let labels: Vec<Label> = (0..100).map(|i| Label::from_bool(i % 3 == 0)).collect();
        let a = stratified_folds(&labels, 5, 9).unwrap();
        assert_eq!(a, stratified_folds(&labels, 5, 9).unwrap());
        assert_ne!(a, stratified_folds(&labels, 5, 10).unwrap());
    }

    #[test]
    fn errors() {
        assert!(matches!(stratified_folds(&[P, N], 1, 0), Err(EvalError::BadK { .. })));
        assert!(matches!(stratified_folds(&[P, N], 3, 0), Err(EvalError::BadK { .. })));
        assert!(matches!(
            stratified_folds(&[N, N, N], 2, 0),
            Err(EvalError::SingleClass { .. })
        ));
        // one positive: the fold holding it leaves a negative-only training split
        assert!(matches!(
            stratified_folds(&[P, N, N, N], 2, 0),
            Err(EvalError::SingleClassTrainingSplit { .. })
        ));
    }
}
