"""Porter suffix-stripping stemmer.

Self-contained implementation of the classic five-step algorithm in its
widely distributed frozen form (the variant with the ``bli``/``logi`` step-2
rules and the leave-short-words-alone rule). Input is expected to be a
lowercase alphabetic word; anything containing non-alphabetic characters is
returned unchanged so analyzer pipelines can feed raw tokens through.
"""

from __future__ import annotations

_VOWELS = frozenset("aeiou")


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        # 'y' is a consonant at the start, otherwise the opposite of its
        # predecessor.
        return True if i == 0 else not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of vowel-consonant sequence transitions in the stem."""
    n = 0
    i = 0
    ln = len(stem)
    while i < ln and _is_consonant(stem, i):
        i += 1
    while i < ln:
        while i < ln and not _is_consonant(stem, i):
            i += 1
        if i >= ln:
            break
        n += 1
        while i < ln and _is_consonant(stem, i):
            i += 1
    return n


def _has_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word: str) -> bool:
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and _is_consonant(word, len(word) - 1)
    )


def _ends_cvc(word: str) -> bool:
    """Consonant-vowel-consonant ending, final consonant not w, x, or y."""
    if len(word) < 3:
        return False
    i = len(word) - 1
    if not _is_consonant(word, i) or _is_consonant(word, i - 1) or not _is_consonant(word, i - 2):
        return False
    return word[i] not in "wxy"


def _replace_if_m(word: str, suffix: str, replacement: str, min_measure: int) -> str | None:
    """Replace ``suffix`` by ``replacement`` when the stem measure exceeds the bound."""
    if not word.endswith(suffix):
        return None
    stem = word[: len(word) - len(suffix)]
    if _measure(stem) > min_measure:
        return stem + replacement
    return word


def _step1a(word: str) -> str:
    if word.endswith("sses"):
        return word[:-2]
    if word.endswith("ies"):
        return word[:-3] + "i"
    if word.endswith("s") and not word.endswith("ss"):
        return word[:-1]
    return word


def _step1b(word: str) -> str:
    if word.endswith("eed"):
        stem = word[:-3]
        if _measure(stem) > 0:
            return word[:-1]
        return word
    if word.endswith("ed"):
        stem = word[:-2]
    elif word.endswith("ing"):
        stem = word[:-3]
    else:
        return word
    if not _has_vowel(stem):
        return word
    if stem.endswith(("at", "bl", "iz")):
        return stem + "e"
    if _ends_double_consonant(stem) and stem[-1] not in "lsz":
        return stem[:-1]
    if _measure(stem) == 1 and _ends_cvc(stem):
        return stem + "e"
    return stem


def _step1c(word: str) -> str:
    if word.endswith("y") and _has_vowel(word[:-1]):
        return word[:-1] + "i"
    return word


_STEP2_RULES = (
    ("ational", "ate"),
    ("tional", "tion"),
    ("enci", "ence"),
    ("anci", "ance"),
    ("izer", "ize"),
    ("bli", "ble"),
    ("alli", "al"),
    ("entli", "ent"),
    ("eli", "e"),
    ("ousli", "ous"),
    ("ization", "ize"),
    ("ation", "ate"),
    ("ator", "ate"),
    ("alism", "al"),
    ("iveness", "ive"),
    ("fulness", "ful"),
    ("ousness", "ous"),
    ("aliti", "al"),
    ("iviti", "ive"),
    ("biliti", "ble"),
    ("logi", "log"),
)

_STEP3_RULES = (
    ("icate", "ic"),
    ("ative", ""),
    ("alize", "al"),
    ("iciti", "ic"),
    ("ical", "ic"),
    ("ful", ""),
    ("ness", ""),
)

# Step 2 and 3 dispatch on a pivot character the way the reference form
# does: only suffixes whose penultimate (step 2) or final (step 3) letter
# matches are tried, longest first within the group.
_STEP2_BY_PIVOT: dict[str, tuple[tuple[str, str], ...]] = {}
for _suf, _rep in _STEP2_RULES:
    _STEP2_BY_PIVOT.setdefault(_suf[-2], ())
    _STEP2_BY_PIVOT[_suf[-2]] += ((_suf, _rep),)

_STEP3_BY_PIVOT: dict[str, tuple[tuple[str, str], ...]] = {}
for _suf, _rep in _STEP3_RULES:
    _STEP3_BY_PIVOT.setdefault(_suf[-1], ())
    _STEP3_BY_PIVOT[_suf[-1]] += ((_suf, _rep),)


def _apply_ruleset(word: str, rules: tuple[tuple[str, str], ...]) -> str:
    for suffix, replacement in sorted(rules, key=lambda r: -len(r[0])):
        if word.endswith(suffix):
            out = _replace_if_m(word, suffix, replacement, 0)
            return out if out is not None else word
    return word


def _step2(word: str) -> str:
    if len(word) < 2:
        return word
    rules = _STEP2_BY_PIVOT.get(word[-2])
    return _apply_ruleset(word, rules) if rules else word


def _step3(word: str) -> str:
    rules = _STEP3_BY_PIVOT.get(word[-1])
    return _apply_ruleset(word, rules) if rules else word


_STEP4_SUFFIXES = (
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
    "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
)


def _step4(word: str) -> str:
    for suffix in sorted(_STEP4_SUFFIXES, key=len, reverse=True):
        if not word.endswith(suffix):
            continue
        stem = word[: len(word) - len(suffix)]
        if suffix == "ion" and (not stem or stem[-1] not in "st"):
            continue
        if _measure(stem) > 1:
            return stem
        return word
    return word


def _step5a(word: str) -> str:
    if not word.endswith("e"):
        return word
    m = _measure(word)
    if m > 1 or (m == 1 and not _ends_cvc(word[:-1])):
        return word[:-1]
    return word


def _step5b(word: str) -> str:
    if word.endswith("ll") and _measure(word) > 1:
        return word[:-1]
    return word


def porter_stem(word: str) -> str:
    """Stem a single lowercase alphabetic word.

    Words of length <= 2 and words containing any non-alphabetic character
    are returned unchanged.
    """
    if len(word) <= 2 or not word.isascii() or not word.isalpha():
        return word
    word = _step1a(word)
    word = _step1b(word)
    word = _step1c(word)
    word = _step2(word)
    word = _step3(word)
    word = _step4(word)
    word = _step5a(word)
    word = _step5b(word)
    return word
