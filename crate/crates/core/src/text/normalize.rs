/// Maps uppercase letters to `A`, lowercase letters to `a` and digits to `0`;
/// everything else passes through. Output has as many characters as input.
pub fn normalize_word(surface: &str) -> String {
    surface
        .chars()
        .map(|c| {
            if c.is_uppercase() {
                'A'
            } else if c.is_lowercase() {
                'a'
            } else if c.is_numeric() {
                '0'
            } else {
                c
            }
        })
        .collect()
}

/// Normalized form with runs of identical characters squeezed to one.
pub fn word_class(surface: &str) -> String {
    let mut out = String::new();
    let mut last = None;
    for c in normalize_word(surface).chars() {
        if last != Some(c) {
            out.push(c);
            last = Some(c);
        }
    }
    out
}
