//! Agglomerative merging of topics by c-TF-IDF cosine similarity, reduction
//! to fewer topics, and the 2-D intertopic distance map.

use topicflow::hierarchy::{build_dendrogram, intertopic_map, reduce_topics, similarity_matrix};
use topicflow::synthetic::synthetic_tweets;
use topicflow::textprep::{encode_bow, normalize_tweet, VocabParams, Vocabulary};
use topicflow::topicrep::{class_term_counts, represent, top_terms};
use topicflow::cluster::Labels;

fn main() -> topicflow::Result<()> {
    let (jsonl, themes) = synthetic_tweets(3000, 5);
    let records: Vec<_> = jsonl
        .lines()
        .map(|l| topicflow::corpus::parse_record(l).expect("generated line parses"))
        .collect();
    let tokens: Vec<Vec<String>> = records.iter().map(|r| normalize_tweet(&r.text)).collect();
    let vocab = Vocabulary::build(&tokens, VocabParams::default())?;

    // Split every theme in two, so there are near-duplicate topics to merge.
    let pairs: Vec<(u64, u32)> = records
        .iter()
        .zip(&themes)
        .map(|(r, &t)| (r.id, (2 * t + (r.id % 2) as usize) as u32))
        .collect();
    let labels = Labels::from_pairs(pairs.iter().copied())?;
    let docs = records.iter().zip(&tokens).map(|(r, t)| Ok(encode_bow(r.id, t, &vocab)));
    let matrix = class_term_counts(docs, &labels, 10, vocab.len())?;
    let reps = represent(&matrix)?;

    let leaves: Vec<u32> = (0..10).collect();
    let dendrogram = build_dendrogram(&similarity_matrix(&reps)?, &leaves)?;
    for m in &dendrogram.merges {
        println!("node {:>2} = {:>2} + {:>2} at distance {:.4}", m.node, m.left, m.right, m.height);
    }

    let reduced = reduce_topics(&pairs, &matrix, &dendrogram, 5)?;
    println!("\nmapping to 5 topics: {:?}", reduced.mapping);
    for rep in &reduced.representations {
        let words: Vec<&str> = top_terms(rep, 5).iter().map(|&(t, _)| vocab.term(t)).collect();
        println!("  topic {} ({} docs): {}", rep.topic_id, rep.size, words.join(" "));
    }

    let map = intertopic_map(&reduced.representations, &vocab)?;
    for p in &map.topics {
        println!("  ({:>7.3}, {:>7.3}) size {:>4}  {}", p.x, p.y, p.size, p.label);
    }
    Ok(())
}
