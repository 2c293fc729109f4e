#!/usr/bin/env python3
"""Generates the bundled toy corpus under data/toy/.

Outputs (all deterministic for a given --seed):
  raw.jsonl        raw records {"text", "lang", "source", "translate"?}
  en_hi.tsv        word dictionary used by the dict: translation backend
  config.json      pipeline config for run-all
  hi_sample.jsonl  held-out Hindi sample for fertility and expansion checks

The corpus mixes high-quality English marked for translation, real Hindi web
text, English web text and a handful of planted near-duplicates. Documents use
headings, bullet and numbered lists, pipe tables and paragraphs.
"""

import argparse
import json
import pathlib
import random

# (english, hindi)
PLACES = [
    ("delhi", "दिल्ली"), ("mumbai", "मुंबई"), ("kolkata", "कोलकाता"), ("chennai", "चेन्नई"),
    ("jaipur", "जयपुर"), ("lucknow", "लखनऊ"), ("patna", "पटना"), ("bhopal", "भोपाल"),
    ("varanasi", "वाराणसी"), ("agra", "आगरा"), ("pune", "पुणे"), ("indore", "इंदौर"),
    ("kanpur", "कानपुर"), ("nagpur", "नागपुर"), ("shimla", "शिमला"), ("dehradun", "देहरादून"),
]
NOUNS = [
    ("city", "शहर"), ("river", "नदी"), ("market", "बाज़ार"), ("temple", "मंदिर"), ("fort", "किला"),
    ("school", "विद्यालय"), ("farmer", "किसान"), ("village", "गाँव"), ("road", "सड़क"), ("train", "रेलगाड़ी"),
    ("king", "राजा"), ("queen", "रानी"), ("army", "सेना"), ("trade", "व्यापार"), ("crop", "फसल"),
    ("rain", "बारिश"), ("mountain", "पहाड़"), ("forest", "जंगल"), ("festival", "त्योहार"), ("book", "किताब"),
    ("teacher", "शिक्षक"), ("student", "छात्र"), ("hospital", "अस्पताल"), ("doctor", "डॉक्टर"), ("bank", "बैंक"),
    ("factory", "कारख़ाना"), ("worker", "मज़दूर"), ("government", "सरकार"), ("election", "चुनाव"), ("law", "क़ानून"),
    ("history", "इतिहास"), ("language", "भाषा"), ("poet", "कवि"), ("song", "गीत"), ("water", "पानी"),
    ("land", "ज़मीन"), ("price", "क़ीमत"), ("tax", "कर"), ("coin", "सिक्का"), ("empire", "साम्राज्य"),
    ("palace", "महल"), ("garden", "बाग़"), ("bridge", "पुल"), ("port", "बंदरगाह"), ("ship", "जहाज़"),
    ("cotton", "कपास"), ("wheat", "गेहूँ"), ("rice", "चावल"), ("sugar", "चीनी"), ("milk", "दूध"),
    ("museum", "संग्रहालय"), ("library", "पुस्तकालय"), ("university", "विश्वविद्यालय"), ("scientist", "वैज्ञानिक"),
    ("machine", "मशीन"), ("electricity", "बिजली"), ("coal", "कोयला"), ("iron", "लोहा"), ("gold", "सोना"),
    ("silver", "चाँदी"), ("family", "परिवार"), ("child", "बच्चा"), ("woman", "महिला"), ("man", "आदमी"),
    ("house", "घर"), ("door", "दरवाज़ा"), ("wall", "दीवार"), ("sky", "आसमान"), ("sun", "सूरज"),
    ("moon", "चाँद"), ("season", "मौसम"), ("winter", "सर्दी"), ("summer", "गर्मी"), ("year", "साल"),
    ("century", "सदी"), ("war", "युद्ध"), ("peace", "शांति"), ("country", "देश"), ("state", "राज्य"),
    ("capital", "राजधानी"), ("population", "जनसंख्या"), ("industry", "उद्योग"), ("income", "आय"),
    ("loan", "कर्ज़"), ("budget", "बजट"), ("rupee", "रुपया"), ("shop", "दुकान"), ("fruit", "फल"),
]
ADJS = [
    ("big", "बड़ा"), ("small", "छोटा"), ("old", "पुराना"), ("new", "नया"), ("beautiful", "सुंदर"),
    ("famous", "प्रसिद्ध"), ("rich", "अमीर"), ("poor", "ग़रीब"), ("long", "लंबा"), ("high", "ऊँचा"),
    ("cold", "ठंडा"), ("hot", "गरम"), ("clean", "साफ़"), ("busy", "व्यस्त"), ("ancient", "प्राचीन"),
    ("modern", "आधुनिक"), ("important", "महत्वपूर्ण"), ("green", "हरा"), ("wide", "चौड़ा"), ("strong", "मज़बूत"),
]
VERBS = [
    ("built", "बनाया"), ("saw", "देखा"), ("sold", "बेचा"), ("bought", "ख़रीदा"), ("wrote", "लिखा"),
    ("read", "पढ़ा"), ("won", "जीता"), ("lost", "हारा"), ("started", "शुरू किया"), ("changed", "बदला"),
    ("protected", "बचाया"), ("opened", "खोला"), ("grew", "उगाया"), ("made", "बनाया"), ("ruled", "शासन किया"),
]
FUNCTION = [
    ("the", "यह"), ("a", "एक"), ("of", "का"), ("in", "में"), ("is", "है"), ("was", "था"), ("and", "और"),
    ("many", "कई"), ("very", "बहुत"), ("near", "पास"), ("from", "से"), ("to", "को"), ("people", "लोग"),
    ("there", "वहाँ"), ("this", "यह"), ("every", "हर"), ("also", "भी"), ("are", "हैं"), ("were", "थे"),
    ("with", "साथ"), ("for", "लिए"), ("by", "द्वारा"), ("on", "पर"), ("after", "बाद"), ("before", "पहले"),
]
DOMAINS = ["History", "Geography", "Economics", "Culture", "Science"]

# Names occasionally left out of the dictionary, so translations keep some
# English words and score worse under the Hindi LM.
RARE = ["Mughal", "Gondwana", "Harappa", "Satavahana", "Vijayanagara", "Chalukya", "Kakatiya", "Hoysala"]


def pick(rng, seq):
    return seq[rng.randrange(len(seq))]


def hi_sentence(rng):
    p, n, n2, a, v = pick(rng, PLACES)[1], pick(rng, NOUNS)[1], pick(rng, NOUNS)[1], pick(rng, ADJS)[1], pick(rng, VERBS)[1]
    year = rng.randrange(1200, 2020)
    templates = [
        f"{p} में एक {a} {n} है।",
        f"{p} का {n} बहुत {a} है।",
        f"राजा ने {p} में {n} {v}।",
        f"लोग हर साल {p} के {n} को देखने आते हैं।",
        f"{year} में {p} के {n} ने {n2} {v}।",
        f"{n} और {n2} {p} की पहचान हैं।",
        f"किसान {p} के पास {n2} उगाते हैं।",
        f"सरकार ने {p} में नया {n} {v}।",
        f"इस {a} {n} का इतिहास बहुत पुराना है।",
        f"{p} के लोग {n2} के लिए प्रसिद्ध हैं।",
        f"क्या {p} का {n} {a} है?",
        f"{p} में {n2} की क़ीमत बढ़ गई।",
    ]
    return pick(rng, templates)


def en_sentence(rng, rare_rate):
    p, n, n2, a, v = pick(rng, PLACES)[0], pick(rng, NOUNS)[0], pick(rng, NOUNS)[0], pick(rng, ADJS)[0], pick(rng, VERBS)[0]
    cap = p.capitalize()
    year = rng.randrange(1200, 2020)
    templates = [
        f"The {a} {n} is in {cap}.",
        f"A {a} {n} was near {cap}.",
        f"The king {v} a {n} in {cap}.",
        f"People of {cap} {v} the {n2}.",
        f"In {year} the {n} of {cap} {v} a {n2}.",
        f"The {n} and the {n2} are very {a}.",
        f"Many people {v} the {a} {n} of {cap}.",
        f"The government {v} a new {n} in {cap}.",
        f"Every {n} in {cap} is {a}.",
        f"Dr. Rao {v} the {n2} of {cap} after the {n}.",
    ]
    s = pick(rng, templates)
    if rng.random() < rare_rate:
        words = s[:-1].split(" ")
        words.insert(rng.randrange(1, len(words)), pick(rng, RARE))
        s = " ".join(words) + "."
    return s


def web_en_sentence(rng):
    topics = ["weather", "cricket", "phones", "movies", "recipes", "travel", "music", "shopping", "gardening"]
    t, t2 = pick(rng, topics), pick(rng, topics)
    templates = [
        f"Top tips for {t} this week!",
        f"Click here to read more about {t} and {t2}.",
        f"Our readers love {t}, so we wrote a short guide.",
        f"Is {t} better than {t2}? We compared both.",
        f"Subscribe for daily updates on {t}.",
        f"Prices for {t} gear dropped by {rng.randrange(5, 60)} percent.",
        f"Mr. Khan shared his {t} story with us.",
    ]
    return pick(rng, templates)


def paragraph(rng, make, n_min=3, n_max=5):
    return " ".join(make() for _ in range(rng.randint(n_min, n_max)))


def document(rng, make, heading):
    parts = [f"# {heading}", "", paragraph(rng, make)]
    shape = rng.randrange(4)
    if shape == 0:
        parts += ["", *[f"- {make()}" for _ in range(rng.randint(2, 4))]]
    elif shape == 1:
        parts += ["", *[f"{i}. {make()}" for i in range(1, rng.randint(3, 5))]]
    elif shape == 2:
        rows = [make().rstrip("।.?!") for _ in range(4)]
        parts += ["", f"| {rows[0]} | {rows[1]} |", "|---|---|", f"| {rows[2]} | {rows[3]} |"]
    parts += ["", paragraph(rng, make, 2, 4)]
    return "\n".join(parts) + "\n"


def mutate(rng, text):
    """Near-duplicate: swap one word for another of similar length."""
    words = text.split(" ")
    for _ in range(50):
        i = rng.randrange(len(words))
        if len(words[i]) > 3 and "\n" not in words[i]:
            words[i] = words[i][::-1]
            break
    return " ".join(words)


def build(seed):
    rng = random.Random(seed)
    records = []
    hi_heads = ["इतिहास", "भूगोल", "अर्थव्यवस्था", "संस्कृति", "विज्ञान"]
    en_heads = ["History notes", "Geography notes", "Economic survey", "Culture today", "Science digest"]

    for i in range(60):
        text = document(rng, lambda: en_sentence(rng, 0.08), f"{pick(rng, en_heads)} {i + 1}")
        records.append({"text": text, "lang": "en", "source": "toy-en-curated", "translate": True})
    for i in range(70):
        text = document(rng, lambda: hi_sentence(rng), f"{pick(rng, hi_heads)} {i + 1}")
        records.append({"text": text, "lang": "hi", "source": "toy-hi-web"})
    for i in range(60):
        text = document(rng, lambda: web_en_sentence(rng), f"Blog post {i + 1}")
        records.append({"text": text, "lang": "en", "source": "toy-en-web"})

    # Planted near-duplicates of earlier documents, one word changed each.
    for k in range(10):
        src = records[rng.randrange(len(records))]
        dup = dict(src)
        dup["text"] = mutate(rng, src["text"])
        dup["source"] = src["source"] + "-mirror"
        records.append(dup)
    rng.shuffle(records)
    return records


def dictionary():
    rows = {}
    for en, hi in PLACES + NOUNS + ADJS + VERBS + FUNCTION:
        rows.setdefault(en, hi)
    rows["king"] = "राजा"
    rows["dr."] = "डॉ."
    rows["rao"] = "राव"
    return rows


def held_out_hindi(seed, n):
    rng = random.Random(seed ^ 0x5A5A)
    heads = ["इतिहास", "भूगोल", "अर्थव्यवस्था"]
    return [{"text": document(rng, lambda: hi_sentence(rng), f"{pick(rng, heads)} {i + 1}"), "lang": "hi",
             "source": "toy-hi-heldout"} for i in range(n)]


CONFIG = {
    "work_dir": "work",
    "seed": 20240901,
    "workers": 1,
    "inputs": ["raw.jsonl"],
    "tokenizers": [
        {"id": "ws", "mode": "whitespace"},
        {"id": "ref", "mode": "vocab-greedy", "vocab_file": "../vocab/reference.vocab"},
    ],
    "translate": {"backend": "dict:en_hi.tsv", "src_lang": "en", "tgt_lang": "hi"},
    "lm": {"lang": "hi", "order": 3, "smoothing": "kneser-ney", "tokenizer": "ws"},
    "filter": {"target_discard_rate": 0.02, "provenance": ["synthetic-translated"]},
    "dedup": {"shingle_width": 5, "num_hashes": 128, "bands": 16, "rows": 8, "verify_threshold": 0.8},
    "blend": {"tokenizer": "ws", "real_weight": 2.0, "synthetic_weight": 1.0,
              "language_split": {"en": 0.5, "hi": 0.5}, "batch_size": 8, "steps": 50},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "toy"))
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def dump_jsonl(name, rows):
        with open(out / name, "w", encoding="utf-8") as f:
            for r in rows:
                f.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")

    dump_jsonl("raw.jsonl", build(args.seed))
    dump_jsonl("hi_sample.jsonl", held_out_hindi(args.seed, 40))
    with open(out / "en_hi.tsv", "w", encoding="utf-8") as f:
        f.write("# english<TAB>hindi, lowercase keys\n")
        for en, hi in sorted(dictionary().items()):
            f.write(f"{en}\t{hi}\n")
    with open(out / "config.json", "w", encoding="utf-8") as f:
        json.dump(CONFIG, f, indent=2, ensure_ascii=False)
        f.write("\n")


if __name__ == "__main__":
    main()
