//! Tweet normalization and vocabulary filtering.

use topicflow::textprep::{encode_bow, normalize_tweet, StopwordList, Tokenizer, VocabParams, Vocabulary};

fn main() -> topicflow::Result<()> {
    let posts = [
        "The FUTURE of #AI is here! Read more: https://t.co/xyz via @techdaily",
        "Cafe\u{301} culture meets #RemoteWork: are offices dead?",
        "#AI and data science jobs keep growing in 2021",
        "Robots and #AI on the factory floor",
        "Data science culture on hybrid teams",
        "Factory robots need data, not offices",
    ];
    for p in &posts {
        println!("{p}\n  -> {:?}", normalize_tweet(p));
    }

    let no_stops = StopwordList::empty();
    println!("\nwithout stopwords: {:?}", Tokenizer::new(&no_stops).tokenize(posts[0]));

    let docs: Vec<Vec<String>> = posts.iter().map(|p| normalize_tweet(p)).collect();
    let params = VocabParams {
        min_df: 2,
        max_df_ratio: 0.9,
        ..VocabParams::default()
    };
    let vocab = Vocabulary::build(&docs, params)?;
    println!("\nvocabulary (min_df 2): {:?}", vocab.terms());
    for (i, d) in docs.iter().enumerate() {
        let bow = encode_bow(i as u64, d, &vocab);
        let named: Vec<(&str, u32)> = bow.counts.iter().map(|&(t, c)| (vocab.term(t), c)).collect();
        println!("  doc {i}: {named:?}");
    }
    Ok(())
}
