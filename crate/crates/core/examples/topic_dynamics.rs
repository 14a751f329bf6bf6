//! Monthly topic shares from hard cluster labels and from soft LDA
//! proportions.

use topicflow::cluster::Labels;
use topicflow::corpus::{parse_record, time_buckets_from, Granularity};
use topicflow::dynamics::{topic_time_matrix, HardLabels, TopicTimeAccumulator};
use topicflow::lda::{fit_stream, LdaConfig};
use topicflow::synthetic::synthetic_tweets;
use topicflow::textprep::{encode_bow, normalize_tweet, VocabParams, Vocabulary};

fn main() -> topicflow::Result<()> {
    let (jsonl, themes) = synthetic_tweets(6000, 2);
    let records: Vec<_> = jsonl.lines().map(|l| parse_record(l).expect("generated line parses")).collect();

    let labels = Labels::from_pairs(records.iter().zip(&themes).map(|(r, &t)| (r.id, t as u32)))?;
    let buckets = time_buckets_from(records.iter().map(|r| Ok((r.id, r.created_at))), Granularity::Month)?;
    let hard = topic_time_matrix(&buckets, &HardLabels { labels: &labels, k: 5 })?;
    println!("hard labels:");
    for (b, row) in hard.buckets.iter().zip(&hard.shares) {
        println!("  {b}  {:.3?}", row);
    }
    println!("  std per topic: {:.4?}", hard.share_std());

    let tokens: Vec<Vec<String>> = records.iter().map(|r| normalize_tweet(&r.text)).collect();
    let vocab = Vocabulary::build(&tokens, VocabParams::default())?;
    let docs: Vec<_> = records.iter().zip(&tokens).map(|(r, t)| encode_bow(r.id, t, &vocab)).collect();
    let config = LdaConfig {
        batch_size: 256,
        passes: 3,
        ..LdaConfig::new(5)
    };
    let model = fit_stream(&docs, vocab.len(), docs.len() as u64, &config)?;
    let mut acc = TopicTimeAccumulator::new(Granularity::Week, 5);
    for (r, d) in records.iter().zip(&docs) {
        acc.add(r.created_at, &model.infer_theta(d)?)?;
    }
    let soft = acc.finish()?;
    println!("\nLDA proportions, first weeks:");
    for (b, row) in soft.buckets.iter().zip(&soft.shares).take(6) {
        println!("  {b}  {:.3?}", row);
    }
    Ok(())
}
