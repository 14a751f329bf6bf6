//! Online variational LDA on a corpus with five planted topics, streamed in
//! mini-batches. Prints the learned top terms and how well they match the
//! planted supports.

use topicflow::lda::{fit_stream, LdaConfig, LdaModel};
use topicflow::synthetic::{greedy_topic_overlap, PlantedSpec};

fn main() -> topicflow::Result<()> {
    let spec = PlantedSpec::default();
    let vocab = spec.vocabulary();
    let config = LdaConfig {
        batch_size: 128,
        passes: 10,
        ..LdaConfig::new(5)
    };
    let start = std::time::Instant::now();
    let model = fit_stream(&spec.stream(), spec.vocab_size(), spec.docs as u64, &config)?;
    println!(
        "fitted k = 5 on {} docs in {:.2?} ({} updates, next rho = {:.4})",
        spec.docs,
        start.elapsed(),
        model.updates_seen(),
        model.next_learning_rate()
    );

    let mut learned = Vec::new();
    for t in 0..model.num_topics() {
        let top = model.topic_top_terms(t, 10)?;
        let words: Vec<&str> = top.iter().map(|&(w, _)| vocab.term(w)).collect();
        println!("topic {t}: {}", words.join(" "));
        learned.push(top.into_iter().map(|x| x.0).collect::<Vec<u32>>());
    }
    let overlap = greedy_topic_overlap(&learned, &spec.supports());
    println!("overlap with planted topics: {overlap:?}");

    let path = std::env::temp_dir().join("online_lda_example.model");
    model.save(&path)?;
    let reloaded = LdaModel::load(&path)?;
    assert_eq!(reloaded.lambda(), model.lambda());
    let doc = &spec.bow_docs()[0];
    let theta = reloaded.infer_theta(doc)?;
    println!("theta of doc 0 after reload: {:.3?}", theta);
    std::fs::remove_file(path).ok();
    Ok(())
}
