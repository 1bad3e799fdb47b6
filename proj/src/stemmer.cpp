// Copyright 2026 The kpgen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied. See the License for the specific language governing
// permissions and limitations under the License.

#include "kpgen/stemmer.hpp"

#include <cstring>

namespace kpgen {
namespace {

// Working state over a word buffer: positions 0..k are live, and j marks
// the stem end after a suffix match. Mirrors the classic reference layout
// so each rule reads like its published form.
struct Stemmer {
  std::string b;
  int k;
  int j;

  explicit Stemmer(std::string word) : b(std::move(word)), k(static_cast<int>(b.size()) - 1), j(0) {}

  // True when b[i] acts as a consonant: y counts as a vowel only after a
  // consonant (and as a consonant at position 0).
  bool cons(int i) const {
    switch (b[i]) {
      case 'a':
      case 'e':
      case 'i':
      case 'o':
      case 'u':
        return false;
      case 'y':
        return i == 0 ? true : !cons(i - 1);
      default:
        return true;
    }
  }

  // Number of vowel-consonant sequences in b[0..j].
  int m() const {
    int n = 0, i = 0;
    while (true) {
      if (i > j) return n;
      if (!cons(i)) break;
      ++i;
    }
    ++i;
    while (true) {
      while (true) {
        if (i > j) return n;
        if (cons(i)) break;
        ++i;
      }
      ++i;
      ++n;
      while (true) {
        if (i > j) return n;
        if (!cons(i)) break;
        ++i;
      }
      ++i;
    }
  }

  bool vowel_in_stem() const {
    for (int i = 0; i <= j; ++i) {
      if (!cons(i)) return true;
    }
    return false;
  }

  bool double_consonant(int i) const { return i >= 1 && b[i] == b[i - 1] && cons(i); }

  // consonant-vowel-consonant ending at i, with the final consonant not
  // w, x, or y; gates the restore-final-e rules.
  bool cvc(int i) const {
    if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
    const char c = b[i];
    return c != 'w' && c != 'x' && c != 'y';
  }

  bool ends(const char* s) {
    const int len = static_cast<int>(std::strlen(s));
    if (len > k + 1) return false;
    if (b.compare(static_cast<std::size_t>(k - len + 1), static_cast<std::size_t>(len), s) != 0) {
      return false;
    }
    j = k - len;
    return true;
  }

  void set_to(const char* s) {
    const int len = static_cast<int>(std::strlen(s));
    b.replace(static_cast<std::size_t>(j + 1), b.size() - static_cast<std::size_t>(j + 1), s);
    k = j + len;
  }

  void replace_if_stem(const char* s) {
    if (m() > 0) set_to(s);
  }

  // Plurals and -ed / -ing.
  void step1ab() {
    if (b[k] == 's') {
      if (ends("sses")) {
        k -= 2;
      } else if (ends("ies")) {
        set_to("i");
      } else if (b[k - 1] != 's') {
        --k;
      }
    }
    if (ends("eed")) {
      if (m() > 0) --k;
    } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
      k = j;
      if (ends("at")) {
        set_to("ate");
      } else if (ends("bl")) {
        set_to("ble");
      } else if (ends("iz")) {
        set_to("ize");
      } else if (double_consonant(k)) {
        --k;
        if (b[k] == 'l' || b[k] == 's' || b[k] == 'z') ++k;
      } else if (m() == 1 && cvc(k)) {
        set_to("e");
      }
    }
  }

  // Terminal y to i when another vowel exists in the stem.
  void step1c() {
    if (ends("y") && vowel_in_stem()) b[k] = 'i';
  }

  // Double suffixes to single ones, guarded by m > 0. Within each final
  // letter group the longest suffix is tested first and a match ends the
  // step whether or not the measure test lets it rewrite.
  void step2() {
    if (k < 1) return;
    switch (b[k - 1]) {
      case 'a':
        if (ends("ational")) {
          replace_if_stem("ate");
          break;
        }
        if (ends("tional")) replace_if_stem("tion");
        break;
      case 'c':
        if (ends("enci")) {
          replace_if_stem("ence");
          break;
        }
        if (ends("anci")) replace_if_stem("ance");
        break;
      case 'e':
        if (ends("izer")) replace_if_stem("ize");
        break;
      case 'l':
        if (ends("abli")) {
          replace_if_stem("able");
          break;
        }
        if (ends("alli")) {
          replace_if_stem("al");
          break;
        }
        if (ends("entli")) {
          replace_if_stem("ent");
          break;
        }
        if (ends("eli")) {
          replace_if_stem("e");
          break;
        }
        if (ends("ousli")) replace_if_stem("ous");
        break;
      case 'o':
        if (ends("ization")) {
          replace_if_stem("ize");
          break;
        }
        if (ends("ation")) {
          replace_if_stem("ate");
          break;
        }
        if (ends("ator")) replace_if_stem("ate");
        break;
      case 's':
        if (ends("alism")) {
          replace_if_stem("al");
          break;
        }
        if (ends("iveness")) {
          replace_if_stem("ive");
          break;
        }
        if (ends("fulness")) {
          replace_if_stem("ful");
          break;
        }
        if (ends("ousness")) replace_if_stem("ous");
        break;
      case 't':
        if (ends("aliti")) {
          replace_if_stem("al");
          break;
        }
        if (ends("iviti")) {
          replace_if_stem("ive");
          break;
        }
        if (ends("biliti")) replace_if_stem("ble");
        break;
      default:
        break;
    }
  }

  // -ic-, -full, -ness and similar.
  void step3() {
    switch (b[k]) {
      case 'e':
        if (ends("icate")) {
          replace_if_stem("ic");
          break;
        }
        if (ends("ative")) {
          replace_if_stem("");
          break;
        }
        if (ends("alize")) replace_if_stem("al");
        break;
      case 'i':
        if (ends("iciti")) replace_if_stem("ic");
        break;
      case 'l':
        if (ends("ical")) {
          replace_if_stem("ic");
          break;
        }
        if (ends("ful")) replace_if_stem("");
        break;
      case 's':
        if (ends("ness")) replace_if_stem("");
        break;
      default:
        break;
    }
  }

  // Drops remaining suffixes when the stem measure exceeds one.
  void step4() {
    if (k < 1) return;
    switch (b[k - 1]) {
      case 'a':
        if (ends("al")) break;
        return;
      case 'c':
        if (ends("ance")) break;
        if (ends("ence")) break;
        return;
      case 'e':
        if (ends("er")) break;
        return;
      case 'i':
        if (ends("ic")) break;
        return;
      case 'l':
        if (ends("able")) break;
        if (ends("ible")) break;
        return;
      case 'n':
        if (ends("ant")) break;
        if (ends("ement")) break;
        if (ends("ment")) break;
        if (ends("ent")) break;
        return;
      case 'o':
        if (ends("ion") && j >= 0 && (b[j] == 's' || b[j] == 't')) break;
        if (ends("ou")) break;
        return;
      case 's':
        if (ends("ism")) break;
        return;
      case 't':
        if (ends("ate")) break;
        if (ends("iti")) break;
        return;
      case 'u':
        if (ends("ous")) break;
        return;
      case 'v':
        if (ends("ive")) break;
        return;
      case 'z':
        if (ends("ize")) break;
        return;
      default:
        return;
    }
    if (m() > 1) k = j;
  }

  // Final -e removal and -ll reduction.
  void step5() {
    j = k;
    if (b[k] == 'e') {
      const int a = m();
      if (a > 1 || (a == 1 && !cvc(k - 1))) --k;
    }
    if (b[k] == 'l' && double_consonant(k) && m() > 1) --k;
  }

  std::string run() {
    if (k > 1) {
      step1ab();
      step1c();
      step2();
      step3();
      step4();
      step5();
    }
    b.resize(static_cast<std::size_t>(k + 1));
    return std::move(b);
  }
};

}  // namespace

std::string porter_stem(const std::string& word) {
  if (word.empty()) return word;
  for (char c : word) {
    if (c < 'a' || c > 'z') return word;
  }
  return Stemmer(word).run();
}

}  // namespace kpgen
