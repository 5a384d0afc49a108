use cswitch_core::corpus::*;
fn main() {
    let langs = LangRegistry::from_codes(&["en", "zu", "xh"]).unwrap();
    let utts = vec![
        Utterance {
            id: "utt0000".into(),
            speaker: "a".into(),
            duration_s: 0.0,
            tokens: vec![],
        },
        Utterance {
            id: "utt0004".into(),
            speaker: "a".into(),
            duration_s: 16.561022139832048,
            tokens: vec![Token::new("qb", LangTag::new("en").unwrap()).unwrap()],
        },
    ];
    let c = Corpus::new(langs, utts).unwrap();
    let mut buf = Vec::new();
    c.write_jsonl(&mut buf).unwrap();
    println!("{}", String::from_utf8_lossy(&buf));
    let back = Corpus::parse_jsonl(buf.as_slice(), &ParseOptions::default()).unwrap();
    for (a, b) in c.utterances().iter().zip(back.utterances()) {
        if a != b {
            println!("DIFF: {a:?}\nvs    {b:?}");
        }
    }
    println!("equal: {}", c == back);
}
