//! Picks the number of LDA topics by C_V coherence over a grid of k.

use topicflow::coherence::{cv_model, sweep, CoherenceConfig};
use topicflow::lda::{fit_stream, LdaConfig};
use topicflow::synthetic::PlantedSpec;

fn main() -> topicflow::Result<()> {
    let spec = PlantedSpec {
        seed: 3,
        ..PlantedSpec::default()
    };
    let docs = spec.token_ids();
    let config = CoherenceConfig::default();

    let result = sweep(&[2, 3, 4, 5, 6, 7, 8], |k| {
        let lda = LdaConfig {
            batch_size: 128,
            passes: 10,
            ..LdaConfig::new(k)
        };
        let model = fit_stream(&spec.stream(), spec.vocab_size(), spec.docs as u64, &lda)?;
        let topics = (0..k)
            .map(|t| Ok((t as u32, model.topic_top_terms(t, config.top_n)?.into_iter().map(|x| x.0).collect())))
            .collect::<topicflow::Result<Vec<_>>>()?;
        let report = cv_model(docs.iter().cloned().map(Ok), &topics, &config)?;
        Ok(report.mean)
    })?;

    for e in &result.table {
        let score = e.score.map(|s| format!("{s:.4}")).unwrap_or_else(|| "failed".into());
        println!("k = {:>2}  C_V = {score}", e.k);
    }
    println!("best k = {:?} (planted: {})", result.argmax, spec.topics);
    Ok(())
}
