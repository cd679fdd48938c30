"""reviewkb: opinion knowledge bases from reviews, and models that use them.

Pipeline: tokenize review corpora, extract (modifier, aspect) opinion tuples,
build an entity/opinion extraction matrix and mine premise-conclusion facts,
train a GRU seq2seq reasoner whose encoder state is a commonsense vector (with
a DistMult triple-embedding baseline), and append those vectors to a text
encoder's token representations for aspect extraction, aspect sentiment
classification, and extractive QA.
"""

__version__ = "0.1.0"
