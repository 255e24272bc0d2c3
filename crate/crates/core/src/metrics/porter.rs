//! Porter stemmer (the 1980 algorithm), used by METEOR's stem-match stage.
//!
//! Works on lowercase ASCII words; anything containing other characters is
//! returned unchanged, as are words of one or two letters. Within each step
//! the longest matching suffix wins and only its condition is tested.

pub fn stem(word: &str) -> String {
    if word.len() <= 2 || !word.bytes().all(|b| b.is_ascii_lowercase()) {
        return word.to_string();
    }
    let mut w = word.as_bytes().to_vec();
    step1a(&mut w);
    step1b(&mut w);
    step1c(&mut w);
    step2(&mut w);
    step3(&mut w);
    step4(&mut w);
    step5a(&mut w);
    step5b(&mut w);
    String::from_utf8(w).expect("stemmer only rearranges ASCII")
}

/// Consonant at position `i`; `y` counts as a consonant only at the start or
/// after a vowel.
fn is_cons(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_cons(w, i - 1),
        _ => true,
    }
}

/// The measure m of a stem: the number of vowel-to-consonant transitions.
fn measure(w: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..w.len() {
        let vowel = !is_cons(w, i);
        if !vowel && prev_vowel {
            m += 1;
        }
        prev_vowel = vowel;
    }
    m
}

fn has_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| !is_cons(w, i))
}

fn ends_double_cons(w: &[u8]) -> bool {
    w.len() >= 2 && w[w.len() - 1] == w[w.len() - 2] && is_cons(w, w.len() - 1)
}

/// consonant-vowel-consonant ending where the final consonant is not w, x,
/// or y.
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_cons(w, n - 3)
        && !is_cons(w, n - 2)
        && is_cons(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

fn ends_with(w: &[u8], suffix: &str) -> bool {
    w.len() >= suffix.len() && &w[w.len() - suffix.len()..] == suffix.as_bytes()
}

/// Replace `suffix` (assumed present) with `replacement`.
fn set_suffix(w: &mut Vec<u8>, suffix: &str, replacement: &str) {
    let keep = w.len() - suffix.len();
    w.truncate(keep);
    w.extend_from_slice(replacement.as_bytes());
}

fn step1a(w: &mut Vec<u8>) {
    if ends_with(w, "sses") {
        set_suffix(w, "sses", "ss");
    } else if ends_with(w, "ies") {
        set_suffix(w, "ies", "i");
    } else if ends_with(w, "ss") {
        // unchanged
    } else if ends_with(w, "s") {
        w.pop();
    }
}

fn step1b(w: &mut Vec<u8>) {
    if ends_with(w, "eed") {
        if measure(&w[..w.len() - 3]) > 0 {
            w.pop();
        }
        return;
    }
    let trimmed = if ends_with(w, "ed") && has_vowel(&w[..w.len() - 2]) {
        w.truncate(w.len() - 2);
        true
    } else if ends_with(w, "ing") && has_vowel(&w[..w.len() - 3]) {
        w.truncate(w.len() - 3);
        true
    } else {
        false
    };
    if trimmed {
        if ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz") {
            w.push(b'e');
        } else if ends_double_cons(w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
            w.pop();
        } else if measure(w) == 1 && ends_cvc(w) {
            w.push(b'e');
        }
    }
}

fn step1c(w: &mut [u8]) {
    if ends_with(w, "y") && has_vowel(&w[..w.len() - 1]) {
        let n = w.len();
        w[n - 1] = b'i';
    }
}

/// Longest matching suffix wins; its m > `min_measure` condition gates the
/// rewrite and, pass or fail, ends the step.
fn apply_table(w: &mut Vec<u8>, rules: &[(&str, &str)], min_measure: usize) {
    for (suffix, replacement) in rules {
        if ends_with(w, suffix) {
            if measure(&w[..w.len() - suffix.len()]) > min_measure {
                set_suffix(w, suffix, replacement);
            }
            return;
        }
    }
}

fn step2(w: &mut Vec<u8>) {
    const RULES: &[(&str, &str)] = &[
        ("ational", "ate"),
        ("ization", "ize"),
        ("iveness", "ive"),
        ("fulness", "ful"),
        ("ousness", "ous"),
        ("tional", "tion"),
        ("biliti", "ble"),
        ("alism", "al"),
        ("ation", "ate"),
        ("entli", "ent"),
        ("ousli", "ous"),
        ("aliti", "al"),
        ("iviti", "ive"),
        ("enci", "ence"),
        ("anci", "ance"),
        ("izer", "ize"),
        ("abli", "able"),
        ("alli", "al"),
        ("ator", "ate"),
        ("eli", "e"),
    ];
    apply_table(w, RULES, 0);
}

fn step3(w: &mut Vec<u8>) {
    const RULES: &[(&str, &str)] = &[
        ("icate", "ic"),
        ("ative", ""),
        ("alize", "al"),
        ("iciti", "ic"),
        ("ical", "ic"),
        ("ful", ""),
        ("ness", ""),
    ];
    apply_table(w, RULES, 0);
}

fn step4(w: &mut Vec<u8>) {
    const RULES: &[&str] = &[
        "ement", "ance", "ence", "able", "ible", "ment", "ant", "ent", "ion", "ism", "ate",
        "iti", "ous", "ive", "ize", "al", "er", "ic", "ou",
    ];
    for suffix in RULES {
        if ends_with(w, suffix) {
            let stem = &w[..w.len() - suffix.len()];
            let extra = *suffix != "ion"
                || stem.last().is_some_and(|&b| b == b's' || b == b't');
            if measure(stem) > 1 && extra {
                w.truncate(w.len() - suffix.len());
            }
            return;
        }
    }
}

fn step5a(w: &mut Vec<u8>) {
    if ends_with(w, "e") {
        let stem = &w[..w.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            w.pop();
        }
    }
}

fn step5b(w: &mut Vec<u8>) {
    if measure(w) > 1 && ends_double_cons(w) && w[w.len() - 1] == b'l' {
        w.pop();
    }
}
