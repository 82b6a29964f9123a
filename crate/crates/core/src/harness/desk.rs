//! Synthetic desk-scale encyclopedia used as the shipped fixture.
//!
//! About a hundred invented people, each with six single-valued attributes.
//! The training corpus holds several noisy articles per person: attribute
//! mentions sometimes carry a wrong value drawn from a small per-person
//! confusion set, and filler sentences carry no checkable claim. The
//! knowledge base is closed-world: one `asserts` fact per true attribute and
//! one `contradicts` fact for every other value of that attribute.

use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::prefix::PrefixEntry;
use crate::factcheck::{Document, FactStatement, Polarity};
use crate::{jsonl, Error, Result};

/// Knobs of the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct DeskSpec {
    pub seed: u64,
    pub entities: usize,
    pub articles_per_entity: usize,
    /// Probability that an attribute mention uses a wrong value.
    pub error_rate: f64,
    /// Wrong values available per person and attribute.
    pub confusions: usize,
    pub fillers_per_article: usize,
    /// Every article of a person mentions the attributes in the same order;
    /// otherwise the order is shuffled per article.
    pub fixed_outline: bool,
    /// Relative weights of name, pronoun and `The <profession>` subjects in
    /// attribute sentences.
    pub fact_subjects: [u32; 3],
    /// The same for filler sentences.
    pub filler_subjects: [u32; 3],
    /// Prefixes going to the validation file; the rest are test prefixes.
    pub validation: usize,
}

impl Default for DeskSpec {
    fn default() -> Self {
        Self {
            seed: 2021,
            entities: 100,
            articles_per_entity: 8,
            error_rate: 0.15,
            confusions: 2,
            fillers_per_article: 3,
            fixed_outline: true,
            fact_subjects: [20, 70, 10],
            filler_subjects: [10, 80, 10],
            validation: 40,
        }
    }
}

struct Slot {
    key: &'static str,
    values: &'static [&'static str],
    render: fn(&str, &str) -> String,
}

const PROFESSIONS: &[&str] = &[
    "singer",
    "painter",
    "novelist",
    "chemist",
    "sculptor",
    "architect",
    "poet",
    "physicist",
];

const SLOTS: [Slot; 6] = [
    Slot {
        key: "profession",
        values: PROFESSIONS,
        render: |s, v| format!("{s} is a {v} ."),
    },
    Slot {
        key: "birthplace",
        values: &[
            "Lisbon", "Oslo", "Dublin", "Vienna", "Prague", "Kyoto", "Lima", "Quito", "Tunis",
            "Perth",
        ],
        render: |s, v| format!("{s} was born in {v} ."),
    },
    Slot {
        key: "award",
        values: &["Halvard", "Marrow", "Linden", "Osprey", "Vesper", "Tamsin"],
        render: |s, v| format!("{s} won the {v} Prize ."),
    },
    Slot {
        key: "school",
        values: &[
            "Ashford", "Brennan", "Corwin", "Dunmore", "Elston", "Fairlie",
        ],
        render: |s, v| format!("{s} studied at {v} College ."),
    },
    Slot {
        key: "instrument",
        values: &["violin", "cello", "piano", "flute", "harp", "oboe"],
        render: |s, v| format!("{s} played the {v} ."),
    },
    Slot {
        key: "debut",
        values: &[
            "1961", "1962", "1963", "1964", "1965", "1966", "1967", "1968", "1969", "1970",
        ],
        render: |s, v| format!("{s} debuted in {v} ."),
    },
];

/// Claim-free sentence templates; `{}` takes one of the listed words.
/// With a name subject every sentence is at most six tokens long.
const FILLERS: &[(&str, &[&str])] = &[
    (
        "toured widely in {} .",
        &["Europe", "Asia", "Africa", "America", "Australia"],
    ),
    (
        "was admired by {} .",
        &["critics", "audiences", "peers", "students"],
    ),
    ("rarely gave interviews .", &[]),
    ("married late .", &[]),
    (
        "lived near the {} .",
        &["coast", "river", "mountains", "harbour", "forest"],
    ),
    ("kept a diary .", &[]),
    ("wrote to {} .", &["friends", "family", "critics", "rivals"]),
    (
        "walked in the {} .",
        &["hills", "park", "countryside", "city"],
    ),
    ("inspired younger {} .", &["artists", "writers", "students"]),
    ("retired early .", &[]),
];

fn filler(rng: &mut ChaCha20Rng, i: usize) -> String {
    let (template, options) = FILLERS[i];
    match options.choose(rng) {
        Some(word) => template.replace("{}", word),
        None => template.to_string(),
    }
}

const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "r", "s", "t", "v", "z",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
const CODAS: &[&str] = &["", "n", "r", "l", "s"];

struct Person {
    name: String,
    pronoun: &'static str,
    values: [usize; 6],
    confusions: [Vec<usize>; 6],
    /// Order in which this person's articles mention attributes 1..6.
    outline: Vec<usize>,
}

impl Person {
    fn profession(&self) -> &'static str {
        PROFESSIONS[self.values[0]]
    }
}

/// Generated fixture contents.
#[derive(Debug, Clone, PartialEq)]
pub struct DeskFixture {
    pub corpus: String,
    pub facts: Vec<FactStatement>,
    pub documents: Vec<Document>,
    pub validation: Vec<PrefixEntry>,
    pub test: Vec<PrefixEntry>,
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn names(rng: &mut ChaCha20Rng, n: usize) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.gen_range(2..=3);
        let mut name = String::new();
        for i in 0..syllables {
            name.push_str(ONSETS.choose(rng).unwrap());
            name.push_str(VOWELS.choose(rng).unwrap());
            if i + 1 == syllables {
                name.push_str(CODAS.choose(rng).unwrap());
            }
        }
        let name = capitalize(&name);
        if !out.contains(&name) {
            out.push(name);
        }
    }
    out
}

fn people(rng: &mut ChaCha20Rng, spec: &DeskSpec) -> Vec<Person> {
    names(rng, spec.entities)
        .into_iter()
        .map(|name| {
            let values: [usize; 6] =
                std::array::from_fn(|s| rng.gen_range(0..SLOTS[s].values.len()));
            let confusions = std::array::from_fn(|s| {
                let mut others: Vec<usize> = (0..SLOTS[s].values.len())
                    .filter(|&v| v != values[s])
                    .collect();
                others.shuffle(rng);
                others.truncate(spec.confusions);
                others
            });
            let mut outline: Vec<usize> = (1..SLOTS.len()).collect();
            outline.shuffle(rng);
            Person {
                name,
                pronoun: if rng.gen_bool(0.5) { "He" } else { "She" },
                values,
                confusions,
                outline,
            }
        })
        .collect()
}

fn subject(rng: &mut ChaCha20Rng, p: &Person, weights: [u32; 3]) -> String {
    let dist = WeightedIndex::new(weights).expect("subject weights must not all be zero");
    match dist.sample(rng) {
        0 => p.name.clone(),
        1 => p.pronoun.to_string(),
        _ => format!("The {}", p.profession()),
    }
}

fn article(rng: &mut ChaCha20Rng, p: &Person, spec: &DeskSpec) -> String {
    let mut outline = p.outline.clone();
    if !spec.fixed_outline {
        outline.shuffle(rng);
    }
    let mut sentences = Vec::new();
    for &s in &outline {
        let slot = &SLOTS[s];
        let value = if rng.gen_bool(spec.error_rate) {
            *p.confusions[s].choose(rng).unwrap()
        } else {
            p.values[s]
        };
        let subject = subject(rng, p, spec.fact_subjects);
        sentences.push((slot.render)(&subject, slot.values[value]));
    }
    let picks: Vec<usize> = (0..FILLERS.len()).collect();
    for &i in picks.choose_multiple(rng, spec.fillers_per_article) {
        let filler = filler(rng, i);
        let subject = subject(rng, p, spec.filler_subjects);
        let at = rng.gen_range(0..=sentences.len());
        sentences.insert(at, format!("{subject} {filler}"));
    }
    let first = (SLOTS[0].render)(&p.name, p.profession());
    format!("{first} {}", sentences.join(" "))
}

fn reference(p: &Person) -> String {
    let mut sentences: Vec<String> = SLOTS
        .iter()
        .enumerate()
        .map(|(s, slot)| (slot.render)(&p.name, slot.values[p.values[s]]))
        .collect();
    sentences.push(format!("{} rarely gave interviews .", p.pronoun));
    sentences.join(" ")
}

/// Builds the fixture deterministically from `spec`.
pub fn generate(spec: &DeskSpec) -> Result<DeskFixture> {
    if spec.entities == 0 || spec.validation > spec.entities {
        return Err(Error::Config(
            "desk fixture needs entities >= validation >= 0".into(),
        ));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let people = people(&mut rng, spec);

    let mut articles = Vec::new();
    for p in &people {
        for _ in 0..spec.articles_per_entity {
            articles.push(article(&mut rng, p, spec));
        }
    }
    articles.shuffle(&mut rng);

    let mut facts = Vec::new();
    let mut documents = Vec::new();
    let mut prefixes = Vec::new();
    for p in &people {
        let doc_id = p.name.to_lowercase();
        for (s, slot) in SLOTS.iter().enumerate() {
            for (v, value) in slot.values.iter().enumerate() {
                let asserts = v == p.values[s];
                facts.push(FactStatement {
                    fact_id: format!("{doc_id}.{}.{}", slot.key, value.to_lowercase()),
                    canonical_text: (slot.render)(&p.name, value),
                    polarity: if asserts {
                        Polarity::Asserts
                    } else {
                        Polarity::Contradicts
                    },
                    source_doc_id: doc_id.clone(),
                });
            }
        }
        documents.push(Document {
            doc_id: doc_id.clone(),
            text: reference(p),
        });
        prefixes.push(PrefixEntry::new(
            &doc_id,
            &p.name,
            &(SLOTS[0].render)(&p.name, p.profession()),
        ));
    }
    let test = prefixes.split_off(spec.validation);
    Ok(DeskFixture {
        corpus: articles.join("\n") + "\n",
        facts,
        documents,
        validation: prefixes,
        test,
    })
}

impl DeskFixture {
    /// Writes `corpus.txt`, `prefixes_validation.jsonl`, `prefixes_test.jsonl`
    /// and `kb/{facts,documents}.jsonl` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let kb = dir.join("kb");
        std::fs::create_dir_all(&kb).map_err(|e| Error::io(&kb, e))?;
        let corpus = dir.join("corpus.txt");
        std::fs::write(&corpus, &self.corpus).map_err(|e| Error::io(&corpus, e))?;
        jsonl::write(dir.join("prefixes_validation.jsonl"), &self.validation)?;
        jsonl::write(dir.join("prefixes_test.jsonl"), &self.test)?;
        jsonl::write(kb.join("facts.jsonl"), &self.facts)?;
        jsonl::write(kb.join("documents.jsonl"), &self.documents)
    }
}
