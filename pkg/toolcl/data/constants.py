"""Static tables shared across the package: benchmark templates,
tool names, label sets, vocabulary symbols and run defaults. This
should only be imported by other modules in this package."""
import collections
import string

__all__ = ['TOOL_NAMES',
           'ARITHMETIC_TEMPLATES',
           'CLASSIFICATION_TEMPLATES',
           'CLASSIFICATION_LABELS',
           'TOY_TASKS',
           'ADVANCED_TASKS',
           'CLS_TASKS',
           'BENCHMARKS',
           'BENCHMARK_SIZES',
           'TRAIN_FRACTION',
           'DECIMAL_PLACES',
           'OPERAND_DECIMALS',
           'SPECIAL_TOKENS',
           'VOCABULARY_SYMBOLS',
           'CLS_WORDS',
           'DEFAULT_TOOL_ACCURACY',
           'DEFAULT_CONTEXT_LEN',
           'REPLAY_SAMPLES_PER_TASK',
           'CHECKPOINT_MAGIC',
           'OUTPUT_ROOT_ENV',
           'LP_MAX_OPERAND']

# Task name -> tool function name as it appears in API calls.
TOOL_NAMES = collections.OrderedDict([
    ('add', 'ADD'),
    ('sub', 'SUB'),
    ('mult', 'MULT'),
    ('div', 'DIV'),
    ('gcd', 'GCD'),
    ('lcm', 'LCM'),
    ('lp', 'LP'),
    ('mnli', 'ENTAILMENT'),
    ('qqp', 'PARAPHRASE'),
    ('cola', 'ACCEPTABLE'),
    ('sst2', 'SENTIMENT')])

# The first template of every list is the one used by the toy benchmark.
ARITHMETIC_TEMPLATES = collections.OrderedDict([
    ('add', ['What is $a$ plus $b$?',
             'What is the sum of $a$ and $b$?',
             'What do you get if you add $a$ to $b$?',
             'What do the total of $a$ and $b$?']),
    ('sub', ['What is $a$ minus $b$?',
             'What is the difference between $a$ and $b$?',
             'What is $b$ less than $a$?',
             'What is $a$ take away $b$?',
             'What is the distance between $a$ and $b$?']),
    ('mult', ['What is $a$ times $b$?',
              'What is the product of $a$ and $b$?',
              'How much is $a$ groups of $b$?',
              '$a$ multiples of $b$ is how much?']),
    ('div', ['What is $a$ divided by $b$?',
             'What is the quotient of $a$ and $b$?',
             'How many times does $b$ fit into $a$?',
             'How $b$ go into $a$?']),
    ('gcd', ['What is the greatest common factor of $a$ and $b$?',
             'Calculate the highest common divisor of $a$ and $b$.',
             'What is the largest number that divides both $a$ and $b$.']),
    ('lcm', ['What is the smallest common multiple of $a$ and $b$?',
             'What is the smallest number that is a multiple of both $a$ and $b$.']),
    ('lp', ['What are the prime factors of $a$?',
            'Which factors of $a$ are prime?'])])

# Sentences are quoted inside the query so their extent is unambiguous.
CLASSIFICATION_TEMPLATES = collections.OrderedDict([
    ('mnli', ['Does "$a$" either entail or contradict "$b$", or neither?',
              'Is "$b$" an entailment or contradiction of "$a$", or neither?']),
    ('qqp', ['Is "$a$" a paraphrasing of "$b$"?',
             'Are "$a$" and "$b$" paraphrases?']),
    ('cola', ['Is "$a$" a linguistically acceptable sentence?',
              'Does "$a$" make sense linguistically?']),
    ('sst2', ['Does "$a$" express a positive or negative sentiment?',
              'What kind of sentiment does "$a$" show?'])])

CLASSIFICATION_LABELS = collections.OrderedDict([
    ('mnli', ['entailment', 'contradiction', 'neutral']),
    ('qqp', ['yes', 'no']),
    ('cola', ['yes', 'no']),
    ('sst2', ['positive', 'negative'])])

TOY_TASKS = ['add', 'sub', 'mult', 'div']
ADVANCED_TASKS = ['add', 'sub', 'mult', 'div', 'gcd', 'lcm', 'lp']
CLS_TASKS = ['mnli', 'qqp', 'cola', 'sst2']
BENCHMARKS = collections.OrderedDict([
    ('toy', TOY_TASKS),
    ('advanced', ADVANCED_TASKS),
    ('cls', CLS_TASKS)])

# (train, test) sizes; the toy benchmark enumerates its operands instead.
BENCHMARK_SIZES = {
    'toy': (8000, 2000),
    'advanced': (16000, 4000),
    'cls': (8500, 5000)}
TRAIN_FRACTION = 0.8

# Answers are rounded to this many places, advanced operands carry two.
DECIMAL_PLACES = 4
OPERAND_DECIMALS = 2

SPECIAL_TOKENS = ['PAD', 'BOS', 'SEP', 'EOS']
VOCABULARY_SYMBOLS = string.digits + string.ascii_letters + ' ' + string.punctuation

# Word lists of the synthetic classification grammar.
CLS_WORDS = {
    'nouns': ['man', 'woman', 'dog', 'cat', 'child', 'bird', 'chef', 'pilot',
              'farmer', 'singer', 'horse', 'nurse'],
    'verbs': ['running', 'sleeping', 'eating', 'singing', 'reading', 'walking',
              'cooking', 'swimming', 'waiting', 'dancing'],
    'places': ['outside', 'at home', 'in town', 'at work', 'nearby', 'upstairs'],
    'topics': ['python', 'chess', 'guitar', 'french', 'math', 'cooking', 'tennis',
               'poetry', 'history', 'drawing', 'physics', 'yoga'],
    'question_frames': ['how do i learn $t$', 'what is the best way to study $t$',
                        'where can i practice $t$', 'how can i get better at $t$',
                        'is $t$ hard to learn'],
    'subjects': ['the film', 'the meal', 'the book', 'the trip', 'the song',
                 'the game', 'the hotel', 'the show'],
    'positive': ['great', 'lovely', 'superb', 'fun', 'charming', 'brilliant'],
    'negative': ['awful', 'boring', 'dull', 'poor', 'bland', 'tedious'],
    'cola_verbs': ['likes', 'sees', 'helps', 'finds', 'calls', 'meets'],
    'cola_objects': ['the dog', 'a friend', 'the chef', 'her sister', 'the pilot',
                     'a stranger']}

# Tool accuracy of the imperfect classification experts.
DEFAULT_TOOL_ACCURACY = 0.914
DEFAULT_CONTEXT_LEN = 128
REPLAY_SAMPLES_PER_TASK = 64
CHECKPOINT_MAGIC = b'TOOLCLv1'
OUTPUT_ROOT_ENV = 'TOOLCL_OUTPUT_ROOT'
# Largest operand LP factors; generated operands stay far below it.
LP_MAX_OPERAND = 10 ** 7
