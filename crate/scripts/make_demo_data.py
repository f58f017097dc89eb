#!/usr/bin/env python3
"""Regenerates the shipped data: the 194-category affect lexicon, the 50-d
GloVe-format embedding fixture and the 1,000-tweet demo corpus with its
128-d sentence vectors, subcategory map and run config.

Output is a pure function of SEED; rerunning rewrites identical files.
"""

import json
import pathlib
import sys

import numpy as np

SEED = 20200301
ROOT = pathlib.Path(__file__).resolve().parent.parent / "data"

# Category -> terms. Key order is the feature order.
LEXICON = """
help: help assist support aid rescue volunteer helping helped
office: office desk meeting boss coworker cubicle paperwork
dance: dance dancing dancer ballet party music
money: money cash dollars pay bills rent salary income savings
wedding: wedding bride groom marriage married ceremony
domestic_work: chores laundry dishes cleaning cooking vacuum
sleep: sleep sleeping asleep nap tired bed insomnia
medical_emergency: emergency ambulance icu ventilator critical hospital er
cold: cold freezing chill snow winter ice
hate: hate hated hateful despise loathe
cheerfulness: cheerful cheer happy smile smiling bright
aggression: aggressive attack fight punch violent hostile
occupation: job jobs work career employed profession
envy: envy jealous jealousy envious
anticipation: waiting expect soon anticipate await countdown
family: family mom dad kids parents children grandparents brother sister
vacation: vacation holiday trip travel beach resort
crime: crime criminal police arrest theft robbery
attractive: attractive gorgeous beautiful handsome pretty
masculine: man men guy male masculine
prison: prison jail inmates cell locked sentence
health: health healthy doctor doctors nurse nurses medicine symptoms
pride: proud pride honor dignity
dispute: argue argument dispute debate disagree
nervousness: nervous anxious anxiety worried uneasy
government: government president minister officials policy congress governor
weakness: weak weakness fragile vulnerable
horror: horror horrible terrifying nightmare scary
swearing_terms: damn hell crap ass
leisure: relax leisure hobby netflix chill
suffering: suffering suffer pain struggle misery
wealthy: rich wealthy millionaire luxury
tourism: tourism tourists tourist sightseeing travel
furniture: couch sofa chair table bed
school: school schools class teacher students homework
beach: beach sand ocean waves surf
journalism: news reporter journalist press media headline
morning: morning sunrise breakfast coffee
banking: bank banking loan mortgage credit
social_media: twitter facebook instagram tweet posts followers
exercise: exercise workout gym run running fitness
night: night midnight tonight dark evening
kill: kill killed killing deaths dead
blue_collar_job: warehouse factory driver delivery cashier
art: art artist painting drawing museum
ridicule: mock ridicule laugh joke clown
play: play playing game games fun
computer: computer laptop screen software zoom
college: college university campus semester degree
optimism: hope hopeful optimistic better brighter forward
stealing: steal stealing stole hoarding hoarders
real_estate: house housing apartment landlord rent
home: home house stay stayhome indoors
divine: god divine blessed heaven prayer
sexual: sexy sex sexual
fear: fear afraid scared terrified panic frightened
irritability: irritated annoyed grumpy cranky
superhero: hero heroes superhero brave
business: business businesses company market economy
driving: drive driving car traffic road
pet: dog dogs cat cats pet puppy
childish: childish silly immature
cooking: cook cooking recipe bake baking kitchen
exasperation: ugh seriously ridiculous fed sick
religion: church religion faith pray praying
internet: internet online wifi website
surprise: surprise surprised shocked wow unbelievable unexpected
reading: read reading book books novel
worship: worship church temple mosque
leader: leader leadership president boss
independence: independence freedom free
movement: move moving walk walking
body: body hands face lungs skin
noise: noise loud noisy quiet
eating: eat eating food meal dinner lunch
zest: excited exciting energy thrilled
confusion: confused confusion unclear unsure
water: water drink drinking
sports: sports football soccer basketball game
death: death died die dying funeral
healing: heal healing recovered recovery recover
heroic: heroic heroes bravery courage
celebration: celebrate celebration party birthday
restaurant: restaurant restaurants cafe takeout
violence: violence violent riot attack
programming: code coding programmer software
dominant_heirarchical: order command obey rule
military: military army soldiers troops
neglect: neglect neglected ignored abandoned
swimming: swim swimming pool
love: love loved loving lovely sweetheart
hiking: hike hiking trail mountain
communication: talk call message chat
hearing: hear hearing listen sound
order: order rules orders guidelines
sympathy: sympathy condolences sorry thoughts praying
hygiene: wash washing sanitizer soap hygiene hands
weather: weather rain sunny storm
anonymity: anonymous unknown secret
trust: trust believe faith reliable
ancient: ancient history old
deception: lie lies lying fake hoax fraud
air_travel: flight flights airport plane airline
fight: fight fighting battle beat
dominant_personality: bossy dominant controlling
music: music song songs sing singing
vehicle: vehicle car bus truck
politeness: please thanks polite kindly
toy: toy toys lego puzzle
farming: farm farmers crops harvest
meeting: meeting meetings conference zoom
war: war battle frontline enemy
speaking: speak speech said says
listen: listen listening heard
urban: city cities downtown streets
shopping: shopping shop shops store groceries supermarket
disgust: disgusting gross disgust nasty
fire: fire burning flames
tool: tool tools hammer
phone: phone call calls texting
gain: gain gained increase rising
sound: sound sounds noise
injury: injury injured hurt wound
rage: rage furious outraged livid
science: science scientists research data study
work: work working workers wfh remote
appearance: look looks appearance hair
valuable: valuable precious priceless
warmth: warm warmth cozy
youth: young youth teens teenager
sadness: sad sadness sorrow heartbroken crying tears lonely
fun: fun funny enjoy enjoying
emotional: emotional emotions feelings feel
joy: joy joyful happy happiness glad
affection: hug hugs affection cuddle
traveling: travel traveling trip journey
fashion: fashion style outfit
ugliness: ugly hideous
lust: lust desire
shame: shame ashamed embarrassed shameful
torment: torment torture agony
economics: economy economic recession unemployment inflation
anger: angry anger mad furious outrage
politics: politics political election vote
ship: ship cruise navy
clothing: clothes shirt mask masks gloves
car: car cars drive
strength: strong strength stronger
technology: technology tech app apps
breaking: break broken breaking
shape_and_size: big small huge tiny
power: power powerful control
white_collar_job: manager lawyer accountant consultant
animal: animal animals wildlife
party: party parties gathering crowd
terrorism: terror terrorist bomb
smell: smell taste scent
disappointment: disappointed disappointing letdown
poor: poor poverty broke homeless
plant: plant plants garden gardening
pain: pain ache hurts painful
beauty: beauty beautiful lovely
timidity: shy timid
philosophy: philosophy meaning truth
negotiate: negotiate deal agreement
negative_emotion: bad terrible awful worst horrible hate sad
cleaning: clean cleaning disinfect wipe
messaging: text texting message dm
competing: compete competition winning
law: law laws legal court
friends: friend friends buddy mates
payment: pay payment paid bills
achievement: achievement achieve success accomplished
alcohol: beer wine drunk drinks
liquid: liquid water juice
feminine: woman women girl female
weapon: gun guns weapon
children: kids children child baby
monster: monster monsters beast
ocean: ocean sea waves
giving: give giving donate donation
contentment: content peaceful calm relaxed
writing: write writing wrote journal
rural: rural village countryside
positive_emotion: good great happy love hope grateful thankful
musical: musical concert band
infection: virus covid coronavirus infected infection cases outbreak pandemic
isolation: isolation quarantine lockdown isolated distancing alone
gratitude: thank thanks grateful thankful appreciate gratitude
worry: worry worried worries concerned concern
denial: hoax fake overblown exaggerated conspiracy scam
supplies: toilet paper sanitizer groceries shelves stock
testing: test testing tests tested positive negative
vaccine: vaccine vaccines vaccination cure trial
"""

TOPICS = {
    "health": "doctor doctors nurse nurses hospital hospitals patients icu ventilator ventilators vaccine cure medicine symptoms fever cough sick health healthcare",
    "virus": "virus covid coronavirus pandemic outbreak cases infected infection positive test testing tests spread deaths died",
    "lockdown": "lockdown quarantine home stayhome isolation distancing curfew closed inside indoors alone socialdistancing",
    "economy": "jobs job economy rent money bills unemployment business businesses market stocks salary layoffs work wfh",
    "government": "government president minister governor officials policy announcement press briefing guidelines update reported confirmed",
    "family": "family kids mom dad friends grandparents neighbors parents children",
    "supplies": "toilet paper groceries food supermarket shelves sanitizer soap masks mask gloves hoarding",
}

EMOTION_WORDS = {
    "optimistic": "hope hopeful better stronger together through ahead brighter soon",
    "thankful": "thank thanks grateful heroes appreciate",
    "empathetic": "thoughts praying sorry love sending care",
    "pessimistic": "never end worst doomed hopeless pointless",
    "anxious": "scared worried nervous panic afraid",
    "sad": "heartbroken miss lonely crying tears sad",
    "annoyed": "annoying ridiculous fed sick tired stupid",
    "denial": "hoax fake overblown flu exaggerated",
    "official_report": "confirmed reported update new total announced",
    "joking": "laughing funny meme haha joke",
    "surprise": "wow believe unbelievable shocked cannot",
}

FUNCTION_WORDS = (
    "the a an is are was be we our us to and of in for this that will all my i you your "
    "it not do so on at with just me they their he she have has get out up about now "
    "today tomorrow week day people everyone stay safe going want out loud oh god "
    "see later by way honest head shaking right back what hell"
).split()

EMOTION_TEMPLATES = {
    "optimistic": ["we will get through this together", "better days ahead stay strong", "there is hope {t} will be ok soon", "stay hopeful we are stronger together"],
    "thankful": ["thank you to all the {t} heroes", "so grateful for our {t}", "thanks to everyone working on {t}", "grateful for the {t} today"],
    "empathetic": ["my thoughts are with everyone affected by {t}", "sending love to all families", "so sorry for those who lost loved ones", "praying for everyone fighting {t}"],
    "pessimistic": ["this will never end", "the worst is yet to come with {t}", "we are doomed {t} is hopeless", "pointless {t} nothing will change"],
    "anxious": ["so scared about {t}", "worried sick about my family and {t}", "nervous about {t} panic everywhere", "afraid of {t} right now"],
    "sad": ["heartbroken about {t}", "i miss my friends so lonely", "crying over {t} today", "sad to see {t} like this"],
    "annoyed": ["so annoying people ignoring {t}", "this {t} is ridiculous", "fed up with {t}", "sick and tired of {t}"],
    "denial": ["{t} is a hoax", "this is overblown just the flu", "fake news about {t}", "{t} is exaggerated"],
    "official_report": ["update {n} new confirmed cases reported", "officials announced {n} new cases today", "total confirmed cases now {n}", "governor reported {n} new deaths"],
    "joking": ["lol {t} meme of the day", "haha my {t} plans are funny", "funny joke about {t} lmao", "{t} memes are the best lol"],
    "surprise": ["wow cannot believe {t}", "unbelievable news about {t}", "shocked by {t} omg", "wow {t} just happened"],
}

TOPIC_PHRASES = {
    "health": ["doctors", "nurses", "hospital", "icu", "vaccine", "healthcare"],
    "virus": ["covid", "coronavirus", "the virus", "testing", "the pandemic"],
    "lockdown": ["lockdown", "quarantine", "stayhome", "social distancing"],
    "economy": ["rent", "jobs", "the economy", "unemployment", "wfh"],
    "government": ["the government", "the president", "the guidelines", "the briefing"],
    "family": ["family", "kids", "grandparents", "friends"],
    "supplies": ["toilet paper", "groceries", "sanitizer", "masks"],
}

DECORATIONS = [
    "", "", "", " #StayHome", " #COVID19", " :(", " :-)", " \U0001F637", " ❤️",
    " https://t.co/abc123", " @WHO", " CUL8R", " tbh", " smh", " idk", " \U0001F602",
    " can't wait", " it's crazy", " w/ family",
]

LABELS = [
    "optimistic", "thankful", "empathetic", "pessimistic", "anxious",
    "sad", "annoyed", "denial", "official_report", "joking", "surprise",
]

SUBCATEGORIES = {
    "healthcare": "doctor doctors nurse nurses hospital hospitals patients icu ventilator ventilators healthcare medicine",
    "virus": "virus covid coronavirus pandemic outbreak cases infected infection spread deaths",
    "testing and cure": "test testing tests positive vaccine cure",
    "lockdown": "lockdown quarantine home stayhome isolation distancing curfew closed indoors socialdistancing",
    "economy": "jobs job economy rent money bills unemployment business businesses market salary layoffs wfh",
    "government": "government president minister governor officials policy announcement briefing guidelines",
    "family": "family kids mom dad friends grandparents neighbors parents children",
    "supplies": "toilet paper groceries food supermarket shelves sanitizer soap masks mask gloves hoarding",
}


def lexicon():
    cats = {}
    for line in LEXICON.strip().splitlines():
        name, terms = line.split(":", 1)
        assert name not in cats, name
        cats[name] = terms.split()
    assert len(cats) == 194, len(cats)
    return cats


def vocabulary(cats):
    words = set(FUNCTION_WORDS)
    for t in TOPICS.values():
        words.update(t.split())
    for t in EMOTION_WORDS.values():
        words.update(t.split())
    for templates in EMOTION_TEMPLATES.values():
        for s in templates:
            words.update(w for w in s.replace("{t}", "").replace("{n}", "").split())
    for phrases in TOPIC_PHRASES.values():
        for p in phrases:
            words.update(p.split())
    for ws in cats.values():
        words.update(ws)
    words.update("happy face sad face with medical mask red heart tears of joy laughing my ass off oh my god to be honest do not know stayhome covid19 crazy family".split())
    return sorted(words)


def glove(rng, words, dim=50):
    centers = {k: rng.normal(0.0, 1.0, dim) for k in sorted(TOPICS)}
    ecenters = {k: rng.normal(0.0, 0.6, dim) for k in LABELS}
    topic_of = {}
    for k in sorted(TOPICS):
        for w in TOPICS[k].split():
            topic_of.setdefault(w, k)
    emo_of = {}
    for k in LABELS:
        for w in EMOTION_WORDS[k].split():
            emo_of.setdefault(w, k)
    rows = []
    for w in words:
        if w in topic_of:
            v = centers[topic_of[w]] + rng.normal(0.0, 0.35, dim)
        elif w in emo_of:
            v = ecenters[emo_of[w]] + rng.normal(0.0, 0.35, dim)
        else:
            v = rng.normal(0.0, 0.4, dim)
        rows.append(w + " " + " ".join(f"{x:.6f}" for x in v))
    return "\n".join(rows) + "\n"


def corpus(rng, n=1000):
    start = np.datetime64("2020-02-24T00:00:00")
    span = int((np.datetime64("2020-06-29T00:00:00") - start) / np.timedelta64(1, "s"))
    offsets = np.sort(rng.integers(0, span, n))
    centers = {k: rng.normal(0.0, 0.12, 128) for k in LABELS}
    tweets, vectors = [], []
    for i, off in enumerate(offsets):
        ts = (start + np.timedelta64(int(off), "s")).astype("datetime64[s]")
        progress = off / span
        # Anxiety fades and optimism grows as the months pass.
        weights = np.array([
            0.6 + 1.2 * progress, 1.0, 0.8, 0.6, 1.6 - 1.1 * progress,
            0.9, 1.0, 0.4, 0.8, 0.9, 0.3,
        ])
        weights /= weights.sum()
        if rng.random() < 0.05:
            chosen = []
        else:
            k = 1 if rng.random() < 0.7 else 2
            chosen = sorted(rng.choice(len(LABELS), size=k, replace=False, p=weights).tolist())
        parts = []
        for li in chosen:
            label = LABELS[li]
            topic = sorted(TOPIC_PHRASES)[rng.integers(len(TOPIC_PHRASES))]
            phrase = TOPIC_PHRASES[topic][rng.integers(len(TOPIC_PHRASES[topic]))]
            tpl = EMOTION_TEMPLATES[label][rng.integers(4)]
            parts.append(tpl.format(t=phrase, n=int(rng.integers(10, 5000))))
        if not parts:
            topic = sorted(TOPIC_PHRASES)[rng.integers(len(TOPIC_PHRASES))]
            parts.append("today " + TOPIC_PHRASES[topic][rng.integers(len(TOPIC_PHRASES[topic]))])
        text = ". ".join(parts)
        text = text[0].upper() + text[1:] + DECORATIONS[rng.integers(len(DECORATIONS))]
        tid = f"d{i + 1:04d}"
        tweets.append({
            "id": tid,
            "created_at": str(ts) + "Z",
            "text": text,
            "labels": [LABELS[li] for li in chosen],
        })
        v = rng.normal(0.0, 0.5, 128)
        for li in chosen:
            v += centers[LABELS[li]]
        vectors.append(tid + " " + " ".join(f"{x:.6f}" for x in v))
    return tweets, "\n".join(vectors) + "\n"


def subcategory_map():
    out = {}
    for sub, terms in SUBCATEGORIES.items():
        for t in terms.split():
            out.setdefault(t, []).append(sub)
    return {k: sorted(v) for k, v in sorted(out.items())}


CONFIG = {
    "tables_dir": "../tables",
    "lexicon": "../lexicon/affect194.json",
    "embeddings": "../embeddings/glove.50d.txt",
    "sentence_vectors": "sentence_vectors.txt",
    "corpus": "tweets.jsonl",
    "taxonomy": "senwave",
    "output_dir": "out",
    "model": "head",
    "train": {"epochs": 40, "learning_rate": 0.01, "batch_size": 32},
    "trends": {"window_days": 7, "bin_size": 250, "source": "predictions"},
    "aspects": {"aspects": 6, "epochs": 10, "negatives": 10, "top_terms": 8, "min_tweets": 20, "subcategory_map": "subcategories.json"},
    "seed": 42,
}


def write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path.relative_to(ROOT.parent)}", file=sys.stderr)


def main():
    rng = np.random.default_rng(SEED)
    cats = lexicon()
    write(ROOT / "lexicon" / "affect194.json", json.dumps(cats, indent=1) + "\n")
    write(ROOT / "embeddings" / "glove.50d.txt", glove(rng, vocabulary(cats)))
    tweets, vectors = corpus(rng)
    write(ROOT / "demo" / "tweets.jsonl", "".join(json.dumps(t, ensure_ascii=False) + "\n" for t in tweets))
    write(ROOT / "demo" / "sentence_vectors.txt", vectors)
    write(ROOT / "demo" / "subcategories.json", json.dumps(subcategory_map(), indent=1) + "\n")
    write(ROOT / "demo" / "config.json", json.dumps(CONFIG, indent=2) + "\n")


if __name__ == "__main__":
    main()
