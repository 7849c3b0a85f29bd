"""Shared fixtures: a toy noun ontology in the real database file format,
a small gazetteer, image helpers and a miniature two-service corpus."""

import json

import numpy as np
import pytest

from profilematch.geo import Geocoder, load_gazetteer
from profilematch.images import GrayImage, InMemoryImageStore
from profilematch.wordnet import HypernymGraph, parse_wordnet

# data.noun records: offset lexfile ss_type w_cnt(hex) lemma lexid ...
# p_cnt then 4-field pointers, gloss after the pipe. Depths from the
# virtual root: entity 2; animal/artifact/person/hike 3; dog/cat/mouse/
# instrument/engineer/teacher/photographer 4; guitar/piano/mouse(dev) 5.
DATA_NOUN = """\
  1 This file is part of a toy ontology fixture in the standard
  2 database layout; leading-whitespace license lines are skipped.
00001740 03 n 01 entity 0 000 | that which is perceived to exist
00007846 03 n 01 person 0 001 @ 00001740 n 0000 | a human being
00015388 05 n 02 animal 0 animate_being 0 001 @ 00001740 n 0000 | a living organism
00021939 03 n 01 artifact 0 001 @ 00001740 n 0000 | a man-made object
00290579 04 n 01 hike 0 001 @ 00001740 n 0000 | a long walk
02084071 05 n 02 dog 0 domestic_dog 0 001 @ 00015388 n 0000 | a member of the genus Canis
02121620 05 n 01 cat 0 001 @ 00015388 n 0000 | feline mammal
02330245 05 n 01 mouse 0 001 @ 00015388 n 0000 | a small rodent
03574816 06 n 01 instrument 0 001 @ 00021939 n 0000 | a device requiring skill
03467517 06 n 01 guitar 0 001 @ 03574816 n 0000 | a stringed instrument
03928116 06 n 01 piano 0 001 @ 03574816 n 0000 | a keyboard instrument
03793489 06 n 01 mouse 0 001 @ 03574816 n 0000 | a hand-operated pointing device
09615807 18 n 01 engineer 0 001 @ 00007846 n 0000 | a person who designs things
10694258 18 n 01 teacher 0 001 @ 00007846 n 0000 | a person whose occupation is teaching
10426749 18 n 01 photographer 0 001 @ 00007846 n 0000 | someone who takes photographs
"""

# index.noun records: lemma pos synset_cnt p_cnt [symbols] sense_cnt
# tagsense_cnt offsets...; 'mouse' lists its animal sense first.
INDEX_NOUN = """\
  1 toy index fixture
animal n 1 1 @ 1 0 00015388
artifact n 1 1 @ 1 0 00021939
cat n 1 1 @ 1 1 02121620
dog n 1 1 @ 1 1 02084071
engineer n 1 1 @ 1 0 09615807
entity n 1 0 1 0 00001740
guitar n 1 1 @ 1 0 03467517
hike n 1 1 @ 1 0 00290579
instrument n 1 1 @ 1 0 03574816
mouse n 2 1 @ 2 1 02330245 03793489
person n 1 1 @ 1 1 00007846
photographer n 1 1 @ 1 0 10426749
piano n 1 1 @ 1 0 03928116
teacher n 1 1 @ 1 0 10694258
"""

GAZETTEER_TSV = """\
new delhi\t28.6139\t77.2090
mumbai\t19.0760\t72.8777
springfield\t39.7817\t-89.6501
portland\t45.5152\t-122.6784
london\t51.5074\t-0.1278
"""


@pytest.fixture(scope="session")
def wordnet_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("wordnet")
    index = d / "index.noun"
    data = d / "data.noun"
    index.write_text(INDEX_NOUN, encoding="utf-8")
    data.write_text(DATA_NOUN, encoding="utf-8")
    return index, data


@pytest.fixture(scope="session")
def toy_graph(wordnet_files) -> HypernymGraph:
    return parse_wordnet(*wordnet_files)


@pytest.fixture(scope="session")
def gazetteer_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("geo") / "gazetteer.tsv"
    path.write_text(GAZETTEER_TSV, encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def geocoder(gazetteer_file) -> Geocoder:
    return Geocoder(gazetteer=load_gazetteer(gazetteer_file))


def solid(value: int) -> GrayImage:
    """A 48x48 image with every pixel at ``value``."""
    return GrayImage(np.full(48 * 48, value, dtype=np.uint8))


@pytest.fixture()
def image_store() -> InMemoryImageStore:
    return InMemoryImageStore({
        "black.png": solid(0),
        "white.png": solid(255),
        "gray.png": solid(128),
    })


TINY_PROFILES = [
    {"service": "twtr", "userid": "asmith", "name": "Anna Smith",
     "description": "software engineer and dog person",
     "location": "new delhi", "image_ref": "black.png", "connections": 120},
    {"service": "twtr", "userid": "bjones", "name": "Bob Jones",
     "description": "photographer with a cat",
     "location": "mumbai", "connections": 340},
    {"service": "lnkd", "userid": "anna.smith", "name": "Anna Smith",
     "description": "engineer who likes dogs",
     "location": "new delhi, india", "image_ref": "gray.png",
     "connections": 95},
    {"service": "lnkd", "userid": "robert.jones", "name": "Robert Jones",
     "description": "photography teacher",
     "location": "mumbai", "connections": 310, "language": "en"},
]

TINY_LINKS = [("twtr", "asmith", "lnkd", "anna.smith"),
              ("twtr", "bjones", "lnkd", "robert.jones")]


@pytest.fixture()
def tiny_corpus_files(tmp_path):
    profiles = tmp_path / "profiles.jsonl"
    with profiles.open("w", encoding="utf-8") as f:
        for record in TINY_PROFILES:
            f.write(json.dumps(record) + "\n")
    links = tmp_path / "links.csv"
    with links.open("w", encoding="utf-8") as f:
        f.write("service_a,userid_a,service_b,userid_b\n")
        for row in TINY_LINKS:
            f.write(",".join(row) + "\n")
    return profiles, links
