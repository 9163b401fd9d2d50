//! Tokenizing, building a vocabulary, framing sequences and loading
//! word vectors.

use argdialog::text::{read_embeddings, BasicTokenizer, Tokenizer, Vocabulary};

fn main() {
    let corpus = ["Marriage is an outdated institution.", "Why is marriage outdated?", "I reject that claim!"];
    let tok = BasicTokenizer;
    println!("tokens: {:?}", tok.split(corpus[1]));

    let vocab = Vocabulary::build(&corpus, 1, &tok);
    println!("{} entries: {:?}", vocab.len(), vocab.tokens());

    let seq = vocab.encode("Is marriage a zeppelin?", &tok, 16);
    println!("ids {:?}", seq.ids);
    println!("tokens {:?}", seq.tokens);

    let mut saved = Vec::new();
    vocab.write(&mut saved).unwrap();
    assert_eq!(Vocabulary::read(saved.as_slice()).unwrap(), vocab);

    let vectors = "2 3\nmarriage 0.1 0.2 0.3\nclaim -0.4 0.0 0.5\n";
    let table = read_embeddings(vectors.as_bytes(), &vocab, 3, 7).unwrap();
    for word in ["marriage", "claim", "why"] {
        println!("{word:>8}: {:.3?}", table.row(word));
    }
}
