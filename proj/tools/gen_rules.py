#!/usr/bin/env python3
# Copyright 2026 The ipa-pipe Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Generates data/bn_rules.tsv, the grapheme rule table for the offline backend.

Consonant + vowel-sign and consonant + hasant pairs are emitted as two-codepoint
rules so longest-match picks them over the bare consonant (which carries the
inherent vowel). Schwa deletion and cluster assimilation are not modelled.
"""

import sys

CONSONANTS = {
    "ক": "k", "খ": "kʰ", "গ": "g", "ঘ": "gʱ", "ঙ": "ŋ",
    "চ": "tʃ", "ছ": "tʃʰ", "জ": "dʒ", "ঝ": "dʒʱ", "ঞ": "n",
    "ট": "ʈ", "ঠ": "ʈʰ", "ড": "ɖ", "ঢ": "ɖʱ", "ণ": "n",
    "ত": "t̪", "থ": "t̪ʰ", "দ": "d̪", "ধ": "d̪ʱ", "ন": "n",
    "প": "p", "ফ": "pʰ", "ব": "b", "ভ": "bʱ", "ম": "m",
    "য": "dʒ", "র": "r", "ল": "l", "শ": "ʃ", "ষ": "ʃ",
    "স": "ʃ", "হ": "h", "\u09DC": "ɽ", "\u09DD": "ɽʱ", "\u09DF": "j",
}
VOWELS = {
    "অ": "ɔ", "আ": "a", "ই": "i", "ঈ": "i", "উ": "u", "ঊ": "u",
    "ঋ": "ri", "ঌ": "li", "এ": "e", "ঐ": "oi̯", "ও": "o", "ঔ": "ou̯",
}
VOWEL_SIGNS = {
    "া": "a", "ি": "i", "ী": "i", "ু": "u", "ূ": "u", "ৃ": "ri",
    "ে": "e", "ৈ": "oi̯", "ো": "o", "ৌ": "ou̯",
}
SIGNS = {
    "ং": "ŋ", "ঃ": "h", "ঁ": "̃", "ৎ": "t̪", "্": "", "়": "", "ৗ": "u",
}
INHERENT = "ɔ"
HASANT = "্"


def rows():
    for c, ipa in CONSONANTS.items():
        yield c, ipa + INHERENT, 0
        yield c + HASANT, ipa, 1
        for v, vipa in VOWEL_SIGNS.items():
            yield c + v, ipa + vipa, 1
    for table in (VOWELS, VOWEL_SIGNS, SIGNS):
        for g, ipa in table.items():
            yield g, ipa, 0


def main(out):
    out.write("# Generated by tools/gen_rules.py; edit the generator, not this file.\n")
    out.write("# graphemes<TAB>phonemes<TAB>priority\n")
    seen = set()
    for g, ipa, prio in rows():
        assert g not in seen, g
        seen.add(g)
        out.write(f"{g}\t{ipa}\t{prio}\n")


if __name__ == "__main__":
    main(sys.stdout)
