/// Tokens ending in a period that never end a sentence.
pub const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "etc.", "vs.", "cf.", "approx.", "Dr.", "Mr.", "Mrs.", "Ms.", "Prof.", "Sr.",
    "Jr.", "St.", "Mt.", "Gen.", "Col.", "Lt.", "Capt.", "Sgt.", "Rep.", "Sen.", "Gov.", "Inc.",
    "Ltd.", "Co.", "Corp.", "No.", "Jan.", "Feb.", "Mar.", "Apr.", "Jun.", "Jul.", "Aug.",
    "Sep.", "Sept.", "Oct.", "Nov.", "Dec.", "U.S.", "U.K.", "U.N.", "D.C.", "a.m.", "p.m.",
];

const CLOSERS: &[char] = &['"', '\'', ')', ']', '”', '’'];
const OPENERS: &[char] = &['"', '\'', '(', '[', '“', '‘'];

/// Splits a paragraph into sentences.
///
/// A boundary is terminal punctuation (`.`, `!`, `?`, optionally followed by closing quotes
/// or brackets) followed by whitespace and an uppercase letter, or by the end of the text.
/// A period that closes a known abbreviation is never a boundary. Sentences are trimmed.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (_, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?') {
                j += 1;
            }
            while j < chars.len() && CLOSERS.contains(&chars[j].1) {
                j += 1;
            }
            let end_byte = chars.get(j).map_or(text.len(), |(b, _)| *b);
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let at_end = k == chars.len();
            let before_capital = k > j && k < chars.len() && starts_sentence(&chars[k..]);
            let abbreviation = c == '.' && ends_with_abbreviation(&text[start..chars[i].0 + 1]);
            if (at_end || before_capital) && !(abbreviation && !at_end) {
                let s = text[start..end_byte].trim();
                if !s.is_empty() {
                    out.push(s.to_owned());
                }
                start = end_byte;
                i = j;
                continue;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    let rest = text[start..].trim();
    if !rest.is_empty() {
        out.push(rest.to_owned());
    }
    out
}

fn starts_sentence(rest: &[(usize, char)]) -> bool {
    rest.iter()
        .map(|(_, c)| *c)
        .find(|c| !OPENERS.contains(c))
        .is_some_and(char::is_uppercase)
}

fn ends_with_abbreviation(upto_period: &str) -> bool {
    let token = upto_period
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(OPENERS);
    ABBREVIATIONS.contains(&token)
}

/// Collapses runs of whitespace to single spaces and trims.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
