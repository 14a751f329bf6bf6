//! Out-of-core reduction and clustering of an embedding file: incremental
//! PCA followed by mini-batch k-means, one batch resident at a time.

use topicflow::cluster::{fit_pipeline, read_labels, ClusterConfig};
use topicflow::embedstore::write_embeddings;
use topicflow::synthetic::{gaussian_blobs, purity};

fn main() -> topicflow::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let centers = [[0.0; 16], [6.0; 16], [-6.0; 16]];
    let (records, truth) = gaussian_blobs(&centers, 300, 0.1, 16, 1);
    let emb = dir.path().join("blobs.fsem");
    write_embeddings(&records, 16, &emb)?;

    let config = ClusterConfig {
        n_components: 2,
        batch_size: 128,
        ..ClusterConfig::new(3)
    };
    let labels_path = dir.path().join("labels.bin");
    let (model, summary) = fit_pipeline(&emb, &config, &labels_path)?;
    println!("label counts: {:?}", summary.label_counts);
    println!("explained variance: {:.3?}", model.pca.explained_variance());
    println!("model state: {} bytes", model.state_bytes());

    let labels: Vec<u32> = read_labels(&labels_path)?.into_iter().map(|x| x.1).collect();
    println!("purity against generating blobs: {:.4}", purity(&labels, &truth));

    let fresh = gaussian_blobs(&centers, 2, 0.1, 16, 99).0;
    println!("new points assigned to {:?}", model.assign(&fresh)?);
    Ok(())
}
