"""
Toy resources for the test suite: a small pronouncing dictionary, tag
lexicon, tagged limerick corpus, names and first-line patterns.
"""
from typing import Dict, List, Tuple

FUNCTION_WORDS: Dict[str, Tuple[str, str]] = {
    # word: (phones, tag); literal words carry their own upper-cased tag
    "who": ("HH UW1", "WHO"),
    "a": ("AH0", "A"),
    "the": ("DH AH0", "THE"),
    "and": ("AH0 N D", "AND"),
    "to": ("T UW1", "TO"),
    "his": ("HH IH1 Z", "HIS"),
    "her": ("HH ER1", "HER"),
    "he": ("HH IY1", "PRP"),
    "she": ("SH IY1", "PRP"),
    "it": ("IH1 T", "PRP"),
    "they": ("DH EY1", "PRP"),
    "then": ("DH EH1 N", "RB"),
    "so": ("S OW1", "RB"),
    "soon": ("S UW1 N", "RB"),
    "once": ("W AH1 N S", "RB"),
    "back": ("B AE1 K", "RB"),
    "away": ("AH0 W EY1", "RB"),
    "in": ("IH0 N", "IN"),
    "on": ("AA1 N", "IN"),
    "with": ("W IH1 DH", "IN"),
    "for": ("F AO1 R", "IN"),
    "from": ("F R AH1 M", "IN"),
    "at": ("AE1 T", "IN"),
    "by": ("B AY1", "IN"),
    "as": ("AE1 Z", "IN"),
    "all": ("AO1 L", "DT"),
    "there": ("DH EH1 R", "EX"),
    "named": ("N EY1 M D", "VBN"),
}

VERBS: Dict[str, Tuple[str, str]] = {
    "ate": ("EY1 T", "VBD"),
    "bought": ("B AO1 T", "VBD"),
    "found": ("F AW1 N D", "VBD"),
    "made": ("M EY1 D", "VBD"),
    "had": ("HH AE1 D", "VBD"),
    "sold": ("S OW1 L D", "VBD"),
    "got": ("G AA1 T", "VBD"),
    "kept": ("K EH1 P T", "VBD"),
    "sat": ("S AE1 T", "VBD"),
    "fell": ("F EH1 L", "VBD"),
    "ran": ("R AE1 N", "VBD"),
    "went": ("W EH1 N T", "VBD"),
    "was": ("W AA1 Z", "VBD"),
    "lived": ("L IH1 V D", "VBD"),
    "began": ("B IH0 G AE1 N", "VBD"),
    "forgot": ("F ER0 G AA1 T", "VBD"),
    "eat": ("IY1 T", "VB"),
    "buy": ("B AY1", "VB"),
    "live": ("L IH1 V", "VB"),
    "go": ("G OW1", "VB"),
}

ADJECTIVES: Dict[str, str] = {
    "big": "B IH1 G",
    "old": "OW1 L D",
    "red": "R EH1 D",
    "small": "S M AO1 L",
    "sweet": "S W IY1 T",
    "fat": "F AE1 T",
    "hot": "HH AA1 T",
    "new": "N UW1",
    "sad": "S AE1 D",
    "blue": "B L UW1",
    "full": "F UH1 L",
    "happy": "HH AE1 P IY0",
}

# stressed-unstressed nouns; also the prompt words
LONG_NOUNS: Dict[str, str] = {
    "money": "M AH1 N IY0",
    "music": "M Y UW1 Z IH0 K",
    "winter": "W IH1 N T ER0",
    "garden": "G AA1 R D AH0 N",
    "city": "S IH1 T IY0",
    "water": "W AO1 T ER0",
    "paper": "P EY1 P ER0",
    "party": "P AA1 R T IY0",
}

# rhyme class -> (monosyllabic nouns, names that rhyme with them)
RHYME_CLASSES: Dict[str, Tuple[Dict[str, str], Dict[str, str]]] = {
    "EY": (
        {"day": "D EY1", "way": "W EY1", "clay": "K L EY1", "hay": "HH EY1", "tray": "T R EY1", "bay": "B EY1"},
        {"kay": "K EY1", "ray": "R EY1", "fay": "F EY1"},
    ),
    "AE T": (
        {"cat": "K AE1 T", "hat": "HH AE1 T", "mat": "M AE1 T", "rat": "R AE1 T", "bat": "B AE1 T"},
        {"pat": "P AE1 T", "matt": "M AE1 T"},
    ),
    "AE N": (
        {"man": "M AE1 N", "pan": "P AE1 N", "van": "V AE1 N", "fan": "F AE1 N"},
        {"dan": "D AE1 N", "jan": "JH AE1 N", "stan": "S T AE1 N"},
    ),
    "IY N": (
        {"queen": "K W IY1 N", "bean": "B IY1 N", "screen": "S K R IY1 N", "scene": "S IY1 N"},
        {"dean": "D IY1 N", "jean": "JH IY1 N"},
    ),
    "IH L": (
        {"hill": "HH IH1 L", "mill": "M IH1 L", "pill": "P IH1 L"},
        {"jill": "JH IH1 L", "phil": "F IH1 L", "will": "W IH1 L"},
    ),
    "EH D": (
        {"bed": "B EH1 D", "bread": "B R EH1 D", "head": "HH EH1 D", "shed": "SH EH1 D"},
        {"ned": "N EH1 D", "ted": "T EH1 D", "fred": "F R EH1 D"},
    ),
    "AA T": (
        {"pot": "P AA1 T", "knot": "N AA1 T", "cot": "K AA1 T", "spot": "S P AA1 T"},
        {"scott": "S K AA1 T"},
    ),
    "UW N": (
        {"moon": "M UW1 N", "spoon": "S P UW1 N", "tune": "T UW1 N", "dune": "D UW1 N"},
        {"june": "JH UW1 N"},
    ),
    "EH N": (
        {"hen": "HH EH1 N", "pen": "P EH1 N", "den": "D EH1 N"},
        {"ben": "B EH1 N", "ken": "K EH1 N", "glen": "G L EH1 N"},
    ),
    "IY": (
        {"tea": "T IY1", "sea": "S IY1", "key": "K IY1", "tree": "T R IY1", "bee": "B IY1"},
        {"lee": "L IY1", "dee": "D IY1"},
    ),
    "EY N": (
        {"rain": "R EY1 N", "train": "T R EY1 N", "lane": "L EY1 N", "plane": "P L EY1 N"},
        {"jane": "JH EY1 N", "shane": "SH EY1 N"},
    ),
    "AY T": (
        {"night": "N AY1 T", "kite": "K AY1 T", "light": "L AY1 T"},
        {"dwight": "D W AY1 T"},
    ),
    "EY K": (
        {"cake": "K EY1 K", "lake": "L EY1 K", "rake": "R EY1 K"},
        {"jake": "JH EY1 K"},
    ),
    "AW N": (
        {"town": "T AW1 N", "gown": "G AW1 N", "crown": "K R AW1 N"},
        {"brown": "B R AW1 N"},
    ),
}

FEMALE_NAMES = {"kay", "fay", "pat", "jan", "jean", "jill", "june", "lee", "dee", "jane"}

PROMPTS = ["money", "music", "winter", "garden", "city", "water", "paper", "party", "rain", "night"]

LINE2 = [
    "who ate a big cake in the old town",
    "who bought a cat and a hat for tea",
    "who had money to buy a new hat",
    "who kept a fat rat in his old shed",
    "who lived with a cat by the blue sea",
    "who sold a sweet cake to the old queen",
    "who once had a hat and a red fan",
    "who began to eat bread in the night",
    "who was happy to live in the hay",
    "who got a spoon from his man in town",
]
LINE3 = [
    "he ate a big hot cake",
    "then she bought a red hat",
    "and he sat on the bed",
    "for the money and tea",
    "she was happy all day",
    "he was fat as a rat",
    "at the lake in the rain",
    "they made bread for the queen",
]
LINE4 = [
    "and he ate a big bean",
    "then he fell in the lake",
    "with a hat on his head",
    "she was sad in the train",
    "in the garden at night",
    "he forgot the old pen",
    "and it fell on the tree",
    "so they sold the red van",
]
LINE5 = [
    "and he ate the big cake in the town",
    "so she sold her old hat for a pen",
    "and they found it was sweet as a bean",
    "then he ran with his fan to the bay",
    "and he soon went away with the clay",
    "so she made a big cake in the night",
    "and the man bought a hat for the queen",
    "then he went to the city for bread",
    "and she sat with her cat on the hill",
    "so he had to go back with his hen",
]

FIRST_LINE_PATTERNS = [
    "there once was a {JJ} {NN} named {NAME}",
    "there once was a {NN} named {NAME}",
]

NUM_RECORDS = 40


def nouns() -> Dict[str, str]:
    out = dict(LONG_NOUNS)
    for class_nouns, _ in RHYME_CLASSES.values():
        out.update(class_nouns)
    return out


def names() -> Dict[str, str]:
    out: Dict[str, str] = {}
    for _, class_names in RHYME_CLASSES.values():
        out.update(class_names)
    return out


def word_tags() -> Dict[str, str]:
    tags = {w: t for w, (_, t) in FUNCTION_WORDS.items()}
    tags.update({w: t for w, (_, t) in VERBS.items()})
    tags.update({w: "JJ" for w in ADJECTIVES})
    tags.update({w: "NN" for w in nouns()})
    return tags


def pronunciations() -> Dict[str, str]:
    phones = {w: p for w, (p, _) in FUNCTION_WORDS.items()}
    phones.update({w: p for w, (p, _) in VERBS.items()})
    phones.update(ADJECTIVES)
    phones.update(nouns())
    phones.update(names())
    return phones


def content_words() -> List[str]:
    """Words that get an embedding vector."""
    return sorted(set(nouns()) | set(ADJECTIVES) | {w for w, (_, t) in VERBS.items()})


def first_line(i: int) -> str:
    adjectives = sorted(a for a in ADJECTIVES if a != "happy")
    class_nouns = sorted(nouns().keys() - LONG_NOUNS.keys())
    all_names = sorted(names())
    return (f"there once was a {adjectives[i % len(adjectives)]} "
            f"{class_nouns[(i * 5) % len(class_nouns)]} named {all_names[(i * 3) % len(all_names)]}")


def corpus_lines(i: int) -> List[str]:
    return [
        first_line(i),
        LINE2[i % len(LINE2)],
        LINE3[i % len(LINE3)],
        LINE4[(i * 3) % len(LINE4)],
        LINE5[(i * 7) % len(LINE5)],
    ]


def tag_line(line: str, line_no: int) -> List[Tuple[str, str]]:
    tags = word_tags()
    out = []
    for index, word in enumerate(line.split()):
        if line_no == 1 and index == len(line.split()) - 1:
            out.append((word, "NAME"))
        else:
            out.append((word, tags.get(word, "NN")))
    return out


def training_sentences() -> List[str]:
    sentences = []
    for i in range(NUM_RECORDS):
        sentences.extend(corpus_lines(i))
    adjectives = sorted(ADJECTIVES)
    for k, noun in enumerate(sorted(nouns())):
        sentences.append(f"he found the {adjectives[k % len(adjectives)]} {noun}")
        sentences.append(f"and she had a {noun} in the {noun}")
    return sentences
