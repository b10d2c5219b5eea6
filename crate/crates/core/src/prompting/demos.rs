//! In-context demonstrations and their grouping for demonstration
//! ensembling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusGraph, Document, QaExample, QuestionType};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub path_docs: Vec<Document>,
    pub question: String,
    pub qtype: QuestionType,
}

impl Demonstration {
    pub fn validate(&self) -> Result<()> {
        if self.path_docs.is_empty() || self.question.trim().is_empty() {
            return Err(Error::InvalidArgument(
                "demonstration needs a non-empty path and question".into(),
            ));
        }
        Ok(())
    }
}

/// Splits demonstrations in input order into chunks of `group_size`; the
/// last chunk may be smaller.
pub fn build_demo_groups(demos: &[Demonstration], group_size: usize) -> Result<Vec<Vec<Demonstration>>> {
    if group_size == 0 {
        return Err(Error::InvalidArgument("demo group size must be at least 1".into()));
    }
    Ok(demos.chunks(group_size).map(<[Demonstration]>::to_vec).collect())
}

/// Turns labeled examples into demonstrations whose path is the gold titles
/// in dataset order.
pub fn demonstrations_from_examples(examples: &[QaExample], graph: &CorpusGraph) -> Result<Vec<Demonstration>> {
    examples
        .iter()
        .map(|ex| {
            let path_docs = ex
                .gold_titles
                .iter()
                .map(|t| graph.require(t).cloned())
                .collect::<Result<Vec<_>>>()?;
            Ok(Demonstration {
                path_docs,
                question: ex.question.clone(),
                qtype: ex.qtype,
            })
        })
        .collect()
}

/// Samples `n` demonstrations without replacement. Bridge and comparison
/// examples are shuffled separately and interleaved, so consecutive pairs
/// cover both question types while both remain available.
pub fn sample_demos(pool: &[Demonstration], n: usize, seed: u64) -> Result<Vec<Demonstration>> {
    if n > pool.len() {
        return Err(Error::InvalidArgument(format!(
            "requested {n} demonstrations from a pool of {}",
            pool.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bridge: Vec<&Demonstration> = pool.iter().filter(|d| d.qtype == QuestionType::Bridge).collect();
    let mut comparison: Vec<&Demonstration> =
        pool.iter().filter(|d| d.qtype == QuestionType::Comparison).collect();
    bridge.shuffle(&mut rng);
    comparison.shuffle(&mut rng);
    let (mut b, mut c) = (bridge.into_iter(), comparison.into_iter());
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let next = if out.len() % 2 == 0 {
            b.next().or_else(|| c.next())
        } else {
            c.next().or_else(|| b.next())
        };
        match next {
            Some(d) => out.push(d.clone()),
            None => break,
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo(i: usize, qtype: QuestionType) -> Demonstration {
        Demonstration {
            path_docs: vec![Document {
                id: i.to_string(),
                title: format!("D{i}"),
                text: String::new(),
                links: vec![],
            }],
            question: format!("q{i}?"),
            qtype,
        }
    }

    #[test]
    fn grouping() {
        let six: Vec<_> = (0..6).map(|i| demo(i, QuestionType::Bridge)).collect();
        let sizes = |g: Vec<Vec<Demonstration>>| g.iter().map(Vec::len).collect::<Vec<_>>();
        assert_eq!(sizes(build_demo_groups(&six, 2).unwrap()), vec![2, 2, 2]);
        assert_eq!(sizes(build_demo_groups(&six[..5], 2).unwrap()), vec![2, 2, 1]);
        assert!(build_demo_groups(&[], 2).unwrap().is_empty());
        assert!(build_demo_groups(&six, 0).is_err());
        let groups = build_demo_groups(&six, 2).unwrap();
        assert_eq!(groups[1][0].question, "q2?");
    }

    #[test]
    fn sampling_is_seeded_and_covers_types() {
        let pool: Vec<_> = (0..10)
            .map(|i| demo(i, if i % 3 == 0 { QuestionType::Comparison } else { QuestionType::Bridge }))
            .collect();
        let a = sample_demos(&pool, 4, 7).unwrap();
        assert_eq!(a, sample_demos(&pool, 4, 7).unwrap());
        for pair in a.chunks(2) {
            assert_ne!(pair[0].qtype, pair[1].qtype);
        }
        let all = sample_demos(&pool, 10, 1).unwrap();
        let mut qs: Vec<_> = all.iter().map(|d| d.question.clone()).collect();
        qs.sort();
        qs.dedup();
        assert_eq!(qs.len(), 10);
        assert!(sample_demos(&pool, 11, 1).is_err());
    }
}
