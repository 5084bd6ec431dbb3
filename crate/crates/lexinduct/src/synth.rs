//! Deterministic synthetic corpora: seeded English-like text with known
//! word boundaries, used for experiments at desk scale and by the paired
//! meaning generator.

/// SplitMix64: tiny, fast, and identical on every platform.
#[derive(Clone, Debug)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng {
            state: seed.wrapping_add(0x9e3779b97f4a7c15),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Common English stems; inflected forms are derived on top of these.
const STEMS: &[&str] = &[
    "the", "of", "and", "a", "to", "in", "is", "was", "he", "for", "it", "with", "as", "his",
    "on", "be", "at", "by", "had", "not", "are", "but", "from", "or", "have", "an", "they",
    "which", "one", "you", "were", "her", "all", "she", "there", "would", "their", "we", "him",
    "been", "has", "when", "who", "will", "more", "no", "if", "out", "so", "said", "what", "up",
    "its", "about", "into", "than", "them", "can", "only", "other", "new", "some", "could",
    "time", "these", "two", "may", "then", "do", "first", "any", "my", "now", "such", "like",
    "our", "over", "man", "me", "even", "most", "made", "after", "also", "did", "many", "before",
    "must", "through", "back", "year", "where", "much", "your", "way", "well", "down", "should",
    "because", "each", "just", "those", "people", "how", "too", "little", "state", "good",
    "very", "make", "world", "still", "own", "see", "men", "work", "long", "get", "here",
    "between", "both", "life", "being", "under", "never", "day", "same", "another", "know",
    "while", "last", "might", "us", "great", "old", "come", "since", "against", "go", "came",
    "right", "used", "take", "three", "house", "water", "dog", "cat", "bird", "fish", "tree",
    "stone", "river", "mountain", "field", "road", "door", "window", "table", "chair", "book",
    "paper", "letter", "word", "name", "story", "night", "morning", "summer", "winter", "rain",
    "snow", "wind", "fire", "earth", "light", "dark", "sound", "voice", "music", "song", "hand",
    "head", "eye", "face", "foot", "heart", "mind", "body", "child", "woman", "mother", "father",
    "friend", "family", "city", "town", "country", "school", "church", "garden", "kitchen",
    "room", "wall", "floor", "street", "corner", "market", "shop", "bread", "milk", "sugar",
    "salt", "apple", "berry", "grass", "flower", "leaf", "branch", "root", "seed", "horse",
    "cow", "sheep", "duck", "goat", "mouse", "rabbit", "bear", "wolf", "fox", "lion", "king",
    "queen", "soldier", "doctor", "teacher", "farmer", "painter", "writer", "singer", "player",
    "walk", "run", "jump", "swim", "fly", "climb", "fall", "stand", "sit", "sleep", "wake",
    "eat", "drink", "cook", "wash", "clean", "open", "close", "start", "stop", "turn", "move",
    "carry", "bring", "send", "give", "keep", "hold", "drop", "pull", "push", "throw", "catch",
    "find", "lose", "look", "watch", "listen", "hear", "speak", "talk", "tell", "ask", "answer",
    "read", "write", "draw", "paint", "sing", "dance", "play", "learn", "teach", "think",
    "remember", "forget", "believe", "hope", "want", "need", "love", "hate", "fear", "help",
    "call", "wait", "stay", "leave", "arrive", "return", "travel", "visit", "meet", "follow",
    "lead", "build", "break", "fix", "cut", "join", "connect", "cover", "fill", "empty",
    "count", "measure", "weigh", "pay", "buy", "sell", "trade", "win", "change", "grow",
    "plant", "pick", "gather", "hunt", "feed", "burn", "freeze", "melt", "shine", "happy",
    "sad", "angry", "quiet", "loud", "fast", "slow", "big", "small", "tall", "short", "wide",
    "narrow", "deep", "high", "low", "heavy", "warm", "cold", "hot", "cool", "dry", "wet",
    "hard", "soft", "smooth", "rough", "sharp", "clear", "bright", "green", "blue", "red",
    "white", "black", "brown", "yellow", "young", "fresh", "clever", "simple", "strange",
    "common", "certain", "possible", "whole", "single", "double", "early", "late", "near",
    "far", "full", "free", "rich", "poor", "strong", "weak", "true", "real", "sure", "kind",
    "wild", "calm", "proud", "brave", "honest", "gentle", "serious", "careful", "present",
    "second", "third", "north", "south", "east", "west", "spring", "autumn", "island",
    "forest", "valley", "bridge", "castle", "village", "harbor", "ocean", "beach", "cloud",
    "storm", "thunder", "shadow", "silver", "gold", "iron", "wood", "glass", "cotton", "wool",
    "dinner", "breakfast", "supper", "moment", "minute", "hour", "week", "month", "season",
    "reason", "question", "problem", "number", "order", "point", "line", "circle", "square",
    "center", "middle", "edge", "side", "top", "bottom", "front", "end", "part", "piece",
    "group", "crowd", "team", "game", "prize", "rule", "law", "power", "force", "peace",
    "war", "battle", "victory", "danger", "safety", "truth", "dream", "idea", "thought",
    "feeling", "sense", "spirit", "nature", "weather", "picture", "color", "shape", "size",
    "form", "kind", "sort", "type", "class", "level", "stage", "step", "mark", "sign",
    "track", "trail", "path", "journey", "distance", "direction", "place", "space", "ground",
    "land", "sky", "star", "moon", "sun",
];

/// A deterministic vocabulary of the requested size: stems first, then
/// inflected variants so the corpus carries real morphology.
pub fn vocabulary(size: usize) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(size);
    let mut seen = std::collections::HashSet::new();
    let push = |out: &mut Vec<String>, seen: &mut std::collections::HashSet<String>, w: String| {
        if out.len() < size && w.len() >= 2 && seen.insert(w.clone()) {
            out.push(w);
        }
    };
    for &stem in STEMS {
        push(&mut out, &mut seen, stem.to_string());
    }
    for suffix in ["s", "ed", "ing", "er", "ly"] {
        for &stem in STEMS {
            if out.len() >= size {
                return out;
            }
            if stem.len() < 3 {
                continue;
            }
            let last = stem.as_bytes()[stem.len() - 1];
            let form = match (suffix, last) {
                ("s", b's') | ("s", b'y') => continue,
                ("ed", b'e') => format!("{stem}d"),
                ("ing", b'e') => format!("{}ing", &stem[..stem.len() - 1]),
                ("er", b'e') => format!("{stem}r"),
                ("ly", b'y') | ("ly", b'l') => continue,
                _ => format!("{stem}{suffix}"),
            };
            push(&mut out, &mut seen, form);
        }
    }
    // beyond the derived forms, compose two-stem compounds
    let mut i = 0;
    while out.len() < size {
        let a = STEMS[i % STEMS.len()];
        let b = STEMS[(i * 7 + 3) % STEMS.len()];
        push(&mut out, &mut seen, format!("{a}{b}"));
        i += 1;
        if i > size * 4 {
            break;
        }
    }
    out
}

/// Cumulative Zipf weights (exponent ~1.05) over `n` ranks.
pub struct Zipf {
    cumulative: Vec<f64>,
}

impl Zipf {
    pub fn new(n: usize) -> Zipf {
        let mut cumulative = Vec::with_capacity(n);
        let mut acc = 0.0;
        for rank in 0..n {
            acc += 1.0 / ((rank + 1) as f64).powf(1.05);
            cumulative.push(acc);
        }
        Zipf { cumulative }
    }

    pub fn sample(&self, rng: &mut Rng) -> usize {
        let total = *self.cumulative.last().unwrap();
        let x = rng.f64() * total;
        self.cumulative.partition_point(|&c| c < x)
    }
}

/// Seeded English-like text with spaces, punctuation and newlines, at least
/// `min_bytes` long. Word frequencies are Zipf-distributed over the
/// vocabulary, so the stream has realistic type/token structure.
pub fn gen_text(vocab_size: usize, min_bytes: usize, seed: u64) -> String {
    let vocab = vocabulary(vocab_size);
    let zipf = Zipf::new(vocab.len());
    let mut rng = Rng::new(seed);
    let mut out = String::with_capacity(min_bytes + 128);
    while out.len() < min_bytes {
        let words = 3 + rng.below(9);
        for i in 0..words {
            if i > 0 {
                // occasional comma keeps delimiter variety
                if rng.below(12) == 0 {
                    out.push(',');
                }
                out.push(' ');
            }
            out.push_str(&vocab[zipf.sample(&mut rng)]);
        }
        out.push_str(match rng.below(10) {
            0 => "?",
            1 => "!",
            _ => ".",
        });
        out.push('\n');
    }
    out
}
