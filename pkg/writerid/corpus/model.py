from dataclasses import dataclass, field, asdict
from os import path
from typing import Dict, List, Optional

from ..errors import ExitCode, WriterIdError
from ..utils import read_json, write_json

SPLITS = ('train', 'test')


class IngestionError(WriterIdError):
    """Raised when a dataset tree cannot be read; lists the offending paths."""
    exit_code = ExitCode.INGESTION

    def __init__(self, message: str, paths: Optional[List[str]] = None):
        self.paths = list(paths or [])
        if self.paths:
            message = f'{message}: {", ".join(self.paths)}'
        super().__init__(message)


@dataclass
class Document:
    """A writer's document, or half of it, assigned to one split.

    ``words`` are word-image paths in reading order; ``part`` is 0 for a whole document and
    1 or 2 for the halves of a split one.
    """
    writer: str
    document: str
    split: str
    words: List[str]
    part: int = 0


@dataclass(frozen=True)
class WordSample:
    writer: str
    document: str
    path: str

    @property
    def word_id(self) -> str:
        return f'{self.document}_{path.splitext(path.basename(self.path))[0]}'


@dataclass
class Corpus:
    name: str
    seed: int
    writers: List[str]
    documents: List[Document] = field(default_factory=list)
    meta: Dict = field(default_factory=dict)

    def split(self, name: str) -> List[WordSample]:
        return [WordSample(doc.writer, doc.document, word)
                for doc in self.documents if doc.split == name for word in doc.words]

    @property
    def train(self) -> List[WordSample]:
        return self.split('train')

    @property
    def test(self) -> List[WordSample]:
        return self.split('test')

    def as_dict(self) -> dict:
        return {'name': self.name, 'seed': self.seed, 'writers': self.writers,
                'documents': [asdict(doc) for doc in self.documents], 'meta': self.meta}

    @classmethod
    def from_dict(cls, d: dict) -> 'Corpus':
        return cls(d['name'], d['seed'], list(d['writers']), [Document(**doc) for doc in d['documents']],
                   d.get('meta', {}))


def save_manifest(corpus: Corpus, file_path: str) -> None:
    """Write the corpus as JSON with word paths relative to the manifest's directory."""
    base = path.dirname(path.abspath(file_path))
    d = corpus.as_dict()
    for doc in d['documents']:
        doc['words'] = [path.relpath(path.abspath(word), base) for word in doc['words']]
    write_json(d, file_path)


def load_manifest(file_path: str) -> Corpus:
    base = path.dirname(path.abspath(file_path))
    d = read_json(file_path)
    for doc in d['documents']:
        doc['words'] = [path.normpath(path.join(base, word)) for word in doc['words']]
    return Corpus.from_dict(d)
