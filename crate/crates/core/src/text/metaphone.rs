//! Double Metaphone (Philips, 2000), codes capped at four characters.

const MAX_LEN: usize = 4;

struct Encoder {
    /// Uppercased input followed by five spaces of padding.
    buf: Vec<char>,
    length: isize,
    slavo_germanic: bool,
    primary: String,
    secondary: String,
}

impl Encoder {
    fn new(word: &str) -> Self {
        let upper: Vec<char> = word.chars().flat_map(char::to_uppercase).collect();
        let text: String = upper.iter().collect();
        let slavo_germanic =
            text.contains('W') || text.contains('K') || text.contains("CZ") || text.contains("WITZ");
        let length = upper.len() as isize;
        let mut buf = upper;
        buf.extend([' '; 5]);
        Encoder {
            buf,
            length,
            slavo_germanic,
            primary: String::new(),
            secondary: String::new(),
        }
    }

    fn last(&self) -> isize {
        self.length - 1
    }

    fn at(&self, pos: isize) -> char {
        if pos < 0 || pos as usize >= self.buf.len() {
            '\0'
        } else {
            self.buf[pos as usize]
        }
    }

    fn is_vowel(&self, pos: isize) -> bool {
        pos >= 0 && pos < self.length && matches!(self.at(pos), 'A' | 'E' | 'I' | 'O' | 'U' | 'Y')
    }

    /// True when the substring at `start` equals any of `options`. Positions
    /// past the end read the space padding.
    fn string_at(&self, start: isize, options: &[&str]) -> bool {
        if start < 0 {
            return false;
        }
        let start = start as usize;
        options.iter().any(|opt| {
            let n = opt.chars().count();
            start + n <= self.buf.len() && self.buf[start..start + n].iter().copied().eq(opt.chars())
        })
    }

    fn add(&mut self, code: &str) {
        self.primary.push_str(code);
        self.secondary.push_str(code);
    }

    fn add_alt(&mut self, primary: &str, secondary: &str) {
        self.primary.push_str(primary);
        self.secondary.push_str(secondary);
    }

    fn germanic_prefix(&self) -> bool {
        self.string_at(0, &["VAN ", "VON "]) || self.string_at(0, &["SCH"])
    }

    fn encode(mut self) -> (String, String) {
        let mut current: isize = 0;
        if self.string_at(0, &["GN", "KN", "PN", "WR", "PS"]) {
            current += 1;
        }
        if self.at(0) == 'X' {
            self.add("S");
            current += 1;
        }

        while (self.primary.len() < MAX_LEN || self.secondary.len() < MAX_LEN) && current < self.length {
            current = match self.at(current) {
                'A' | 'E' | 'I' | 'O' | 'U' | 'Y' => {
                    if current == 0 {
                        self.add("A");
                    }
                    current + 1
                }
                'B' => {
                    self.add("P");
                    current + if self.at(current + 1) == 'B' { 2 } else { 1 }
                }
                'Ç' => {
                    self.add("S");
                    current + 1
                }
                'C' => self.c(current),
                'D' => self.d(current),
                'F' => {
                    self.add("F");
                    current + if self.at(current + 1) == 'F' { 2 } else { 1 }
                }
                'G' => self.g(current),
                'H' => {
                    if (current == 0 || self.is_vowel(current - 1)) && self.is_vowel(current + 1) {
                        self.add("H");
                        current + 2
                    } else {
                        current + 1
                    }
                }
                'J' => self.j(current),
                'K' => {
                    self.add("K");
                    current + if self.at(current + 1) == 'K' { 2 } else { 1 }
                }
                'L' => self.l(current),
                'M' => {
                    self.add("M");
                    let silent_b = self.string_at(current - 1, &["UMB"])
                        && (current + 1 == self.last() || self.string_at(current + 2, &["ER"]));
                    current + if silent_b || self.at(current + 1) == 'M' { 2 } else { 1 }
                }
                'N' => {
                    self.add("N");
                    current + if self.at(current + 1) == 'N' { 2 } else { 1 }
                }
                'Ñ' => {
                    self.add("N");
                    current + 1
                }
                'P' => {
                    if self.at(current + 1) == 'H' {
                        self.add("F");
                        current + 2
                    } else {
                        self.add("P");
                        current + if self.string_at(current + 1, &["P", "B"]) { 2 } else { 1 }
                    }
                }
                'Q' => {
                    self.add("K");
                    current + if self.at(current + 1) == 'Q' { 2 } else { 1 }
                }
                'R' => {
                    if current == self.last()
                        && !self.slavo_germanic
                        && self.string_at(current - 2, &["IE"])
                        && !self.string_at(current - 4, &["ME", "MA"])
                    {
                        self.add_alt("", "R");
                    } else {
                        self.add("R");
                    }
                    current + if self.at(current + 1) == 'R' { 2 } else { 1 }
                }
                'S' => self.s(current),
                'T' => self.t(current),
                'V' => {
                    self.add("F");
                    current + if self.at(current + 1) == 'V' { 2 } else { 1 }
                }
                'W' => self.w(current),
                'X' => {
                    let french = current == self.last()
                        && (self.string_at(current - 3, &["IAU", "EAU"])
                            || self.string_at(current - 2, &["AU", "OU"]));
                    if !french {
                        self.add("KS");
                    }
                    current + if self.string_at(current + 1, &["C", "X"]) { 2 } else { 1 }
                }
                'Z' => self.z(current),
                _ => current + 1,
            };
        }

        self.primary.truncate(MAX_LEN);
        self.secondary.truncate(MAX_LEN);
        (self.primary, self.secondary)
    }

    fn c(&mut self, cur: isize) -> isize {
        // germanic "-ach-", but not "-achi-" / "-ache-" (except bacher, macher)
        if cur > 1
            && !self.is_vowel(cur - 2)
            && self.string_at(cur - 1, &["ACH"])
            && self.at(cur + 2) != 'I'
            && (self.at(cur + 2) != 'E' || self.string_at(cur - 2, &["BACHER", "MACHER"]))
        {
            self.add("K");
            return cur + 2;
        }
        if cur == 0 && self.string_at(cur, &["CAESAR"]) {
            self.add("S");
            return cur + 2;
        }
        if self.string_at(cur, &["CHIA"]) {
            self.add("K");
            return cur + 2;
        }
        if self.string_at(cur, &["CH"]) {
            if cur > 0 && self.string_at(cur, &["CHAE"]) {
                self.add_alt("K", "X");
                return cur + 2;
            }
            if cur == 0
                && (self.string_at(cur + 1, &["HARAC", "HARIS"])
                    || self.string_at(cur + 1, &["HOR", "HYM", "HIA", "HEM"]))
                && !self.string_at(0, &["CHORE"])
            {
                self.add("K");
                return cur + 2;
            }
            if self.germanic_prefix()
                || self.string_at(cur - 2, &["ORCHES", "ARCHIT", "ORCHID"])
                || self.string_at(cur + 2, &["T", "S"])
                || ((self.string_at(cur - 1, &["A", "O", "U", "E"]) || cur == 0)
                    && self.string_at(cur + 2, &["L", "R", "N", "M", "B", "H", "F", "V", "W", " "]))
            {
                self.add("K");
            } else if cur > 0 {
                if self.string_at(0, &["MC"]) {
                    self.add("K");
                } else {
                    self.add_alt("X", "K");
                }
            } else {
                self.add("X");
            }
            return cur + 2;
        }
        if self.string_at(cur, &["CZ"]) && !self.string_at(cur - 2, &["WICZ"]) {
            self.add_alt("S", "X");
            return cur + 2;
        }
        if self.string_at(cur + 1, &["CIA"]) {
            self.add("X");
            return cur + 3;
        }
        if self.string_at(cur, &["CC"]) && !(cur == 1 && self.at(0) == 'M') {
            if self.string_at(cur + 2, &["I", "E", "H"]) && !self.string_at(cur + 2, &["HU"]) {
                if (cur == 1 && self.at(cur - 1) == 'A') || self.string_at(cur - 1, &["UCCEE", "UCCES"]) {
                    self.add("KS");
                } else {
                    self.add("X");
                }
                return cur + 3;
            }
            self.add("K");
            return cur + 2;
        }
        if self.string_at(cur, &["CK", "CG", "CQ"]) {
            self.add("K");
            return cur + 2;
        }
        if self.string_at(cur, &["CI", "CE", "CY"]) {
            if self.string_at(cur, &["CIO", "CIE", "CIA"]) {
                self.add_alt("S", "X");
            } else {
                self.add("S");
            }
            return cur + 2;
        }
        self.add("K");
        if self.string_at(cur + 1, &[" C", " Q", " G"]) {
            cur + 3
        } else if self.string_at(cur + 1, &["C", "K", "Q"]) && !self.string_at(cur + 1, &["CE", "CI"]) {
            cur + 2
        } else {
            cur + 1
        }
    }

    fn d(&mut self, cur: isize) -> isize {
        if self.string_at(cur, &["DG"]) {
            if self.string_at(cur + 2, &["I", "E", "Y"]) {
                self.add("J");
                return cur + 3;
            }
            self.add("TK");
            return cur + 2;
        }
        self.add("T");
        if self.string_at(cur, &["DT", "DD"]) {
            cur + 2
        } else {
            cur + 1
        }
    }

    fn g(&mut self, cur: isize) -> isize {
        if self.at(cur + 1) == 'H' {
            if cur > 0 && !self.is_vowel(cur - 1) {
                self.add("K");
                return cur + 2;
            }
            if cur == 0 {
                if self.at(cur + 2) == 'I' {
                    self.add("J");
                } else {
                    self.add("K");
                }
                return cur + 2;
            }
            // Parker's rule
            if (cur > 1 && self.string_at(cur - 2, &["B", "H", "D"]))
                || (cur > 2 && self.string_at(cur - 3, &["B", "H", "D"]))
                || (cur > 3 && self.string_at(cur - 4, &["B", "H"]))
            {
                return cur + 2;
            }
            if cur > 2 && self.at(cur - 1) == 'U' && self.string_at(cur - 3, &["C", "G", "L", "R", "T"]) {
                self.add("F");
            } else if cur > 0 && self.at(cur - 1) != 'I' {
                self.add("K");
            }
            return cur + 2;
        }
        if self.at(cur + 1) == 'N' {
            if cur == 1 && self.is_vowel(0) && !self.slavo_germanic {
                self.add_alt("KN", "N");
            } else if !self.string_at(cur + 2, &["EY"]) && self.at(cur + 1) != 'Y' && !self.slavo_germanic {
                self.add_alt("N", "KN");
            } else {
                self.add("KN");
            }
            return cur + 2;
        }
        if self.string_at(cur + 1, &["LI"]) && !self.slavo_germanic {
            self.add_alt("KL", "L");
            return cur + 2;
        }
        if cur == 0
            && (self.at(cur + 1) == 'Y'
                || self.string_at(
                    cur + 1,
                    &["ES", "EP", "EB", "EL", "EY", "IB", "IL", "IN", "IE", "EI", "ER"],
                ))
        {
            self.add_alt("K", "J");
            return cur + 2;
        }
        if (self.string_at(cur + 1, &["ER"]) || self.at(cur + 1) == 'Y')
            && !self.string_at(0, &["DANGER", "RANGER", "MANGER"])
            && !self.string_at(cur - 1, &["E", "I"])
            && !self.string_at(cur - 1, &["RGY", "OGY"])
        {
            self.add_alt("K", "J");
            return cur + 2;
        }
        if self.string_at(cur + 1, &["E", "I", "Y"]) || self.string_at(cur - 1, &["AGGI", "OGGI"]) {
            if self.germanic_prefix() || self.string_at(cur + 1, &["ET"]) {
                self.add("K");
            } else if self.string_at(cur + 1, &["IER "]) {
                self.add("J");
            } else {
                self.add_alt("J", "K");
            }
            return cur + 2;
        }
        self.add("K");
        if self.at(cur + 1) == 'G' {
            cur + 2
        } else {
            cur + 1
        }
    }

    fn j(&mut self, cur: isize) -> isize {
        if self.string_at(cur, &["JOSE"]) || self.string_at(0, &["SAN "]) {
            if (cur == 0 && self.at(cur + 4) == ' ') || self.string_at(0, &["SAN "]) {
                self.add("H");
            } else {
                self.add_alt("J", "H");
            }
            return cur + 1;
        }
        if cur == 0 && !self.string_at(cur, &["JOSE"]) {
            self.add_alt("J", "A");
        } else if self.is_vowel(cur - 1)
            && !self.slavo_germanic
            && (self.at(cur + 1) == 'A' || self.at(cur + 1) == 'O')
        {
            self.add_alt("J", "H");
        } else if cur == self.last() {
            self.add_alt("J", "");
        } else if !self.string_at(cur + 1, &["L", "T", "K", "S", "N", "M", "B", "Z"])
            && !self.string_at(cur - 1, &["S", "K", "L"])
        {
            self.add("J");
        }
        if self.at(cur + 1) == 'J' {
            cur + 2
        } else {
            cur + 1
        }
    }

    fn l(&mut self, cur: isize) -> isize {
        if self.at(cur + 1) == 'L' {
            let last = self.last();
            if (cur == self.length - 3 && self.string_at(cur - 1, &["ILLO", "ILLA", "ALLE"]))
                || ((self.string_at(last - 1, &["AS", "OS"]) || self.string_at(last, &["A", "O"]))
                    && self.string_at(cur - 1, &["ALLE"]))
            {
                self.add_alt("L", "");
                return cur + 2;
            }
            self.add("L");
            return cur + 2;
        }
        self.add("L");
        cur + 1
    }

    fn s(&mut self, cur: isize) -> isize {
        if self.string_at(cur - 1, &["ISL", "YSL"]) {
            return cur + 1;
        }
        if cur == 0 && self.string_at(cur, &["SUGAR"]) {
            self.add_alt("X", "S");
            return cur + 1;
        }
        if self.string_at(cur, &["SH"]) {
            if self.string_at(cur + 1, &["HEIM", "HOEK", "HOLM", "HOLZ"]) {
                self.add("S");
            } else {
                self.add("X");
            }
            return cur + 2;
        }
        if self.string_at(cur, &["SIO", "SIA"]) || self.string_at(cur, &["SIAN"]) {
            if self.slavo_germanic {
                self.add("S");
            } else {
                self.add_alt("S", "X");
            }
            return cur + 3;
        }
        if (cur == 0 && self.string_at(cur + 1, &["M", "N", "L", "W"])) || self.string_at(cur + 1, &["Z"]) {
            self.add_alt("S", "X");
            return cur + if self.string_at(cur + 1, &["Z"]) { 2 } else { 1 };
        }
        if self.string_at(cur, &["SC"]) {
            if self.at(cur + 2) == 'H' {
                if self.string_at(cur + 3, &["OO", "ER", "EN", "UY", "ED", "EM"]) {
                    if self.string_at(cur + 3, &["ER", "EN"]) {
                        self.add_alt("X", "SK");
                    } else {
                        self.add("SK");
                    }
                } else if cur == 0 && !self.is_vowel(3) && self.at(3) != 'W' {
                    self.add_alt("X", "S");
                } else {
                    self.add("X");
                }
                return cur + 3;
            }
            if self.string_at(cur + 2, &["I", "E", "Y"]) {
                self.add("S");
            } else {
                self.add("SK");
            }
            return cur + 3;
        }
        if cur == self.last() && self.string_at(cur - 2, &["AI", "OI"]) {
            self.add_alt("", "S");
        } else {
            self.add("S");
        }
        cur + if self.string_at(cur + 1, &["S", "Z"]) { 2 } else { 1 }
    }

    fn t(&mut self, cur: isize) -> isize {
        if self.string_at(cur, &["TION"]) || self.string_at(cur, &["TIA", "TCH"]) {
            self.add("X");
            return cur + 3;
        }
        if self.string_at(cur, &["TH"]) || self.string_at(cur, &["TTH"]) {
            if self.string_at(cur + 2, &["OM", "AM"]) || self.germanic_prefix() {
                self.add("T");
            } else {
                self.add_alt("0", "T");
            }
            return cur + 2;
        }
        self.add("T");
        cur + if self.string_at(cur + 1, &["T", "D"]) { 2 } else { 1 }
    }

    fn w(&mut self, cur: isize) -> isize {
        if self.string_at(cur, &["WR"]) {
            self.add("R");
            return cur + 2;
        }
        if cur == 0 && (self.is_vowel(cur + 1) || self.string_at(cur, &["WH"])) {
            if self.is_vowel(cur + 1) {
                self.add_alt("A", "F");
            } else {
                self.add("A");
            }
        }
        if (cur == self.last() && self.is_vowel(cur - 1))
            || self.string_at(cur - 1, &["EWSKI", "EWSKY", "OWSKI", "OWSKY"])
            || self.string_at(0, &["SCH"])
        {
            self.add_alt("", "F");
            return cur + 1;
        }
        if self.string_at(cur, &["WICZ", "WITZ"]) {
            self.add_alt("TS", "FX");
            return cur + 4;
        }
        cur + 1
    }

    fn z(&mut self, cur: isize) -> isize {
        if self.at(cur + 1) == 'H' {
            self.add("J");
            return cur + 2;
        }
        if self.string_at(cur + 1, &["ZO", "ZI", "ZA"])
            || (self.slavo_germanic && cur > 0 && self.at(cur - 1) != 'T')
        {
            self.add_alt("S", "TS");
        } else {
            self.add("S");
        }
        cur + if self.at(cur + 1) == 'Z' { 2 } else { 1 }
    }
}

/// Primary and secondary Double Metaphone codes. When a word has no
/// alternate pronunciation the two codes are equal.
pub fn double_metaphone(word: &str) -> (String, String) {
    Encoder::new(word).encode()
}
