"""Pipeline tunables: flat ``key = value`` files plus ``--set key=value`` overrides."""

from dataclasses import dataclass, fields
from typing import Dict, Iterable, Optional, Tuple, Union

from werkzeug.datastructures import MultiDict
from wtforms.fields.core import UnboundField

from . import __version__
from .errors import ExitCode, WriterIdError
from .forms import PipelineConfigForm, parse_number_list


class ConfigError(WriterIdError):
    """Raised when pipeline settings cannot be parsed or fail validation."""
    exit_code = ExitCode.CONFIG


@dataclass(frozen=True)
class PipelineConfig:
    seed: int
    denoise_sigma: float
    denoise_threshold: float
    clean_words: bool
    log_sigma: float
    min_area: int
    octaves: int
    scales_per_octave: int
    base_sigma: float
    contrast_threshold: float
    edge_threshold: float
    patch_size_factor: float
    max_patches_per_word: int
    embed_dim: int
    stem_filters: int
    block_filters: Tuple[int, ...]
    precision: str
    loss: str
    margin: float
    batch_size: int
    learning_rate: float
    epochs: int
    steps_per_epoch: int
    embed_corpus: str
    omniglot_root: str
    spca_components: int
    spca_lambda: float
    spca_lambda1: Union[str, float]
    spca_sample: int
    kl_epsilon: float
    weight_mode: str
    svm_c: Tuple[float, ...]
    svm_gamma: Tuple[Union[str, float], ...]
    svm_folds: int
    svm_cv_samples: int
    svm_max_iter: int
    fusion: str
    version: str = __version__

    def embednet_config(self):
        from .embednet import EmbedNetConfig
        return EmbedNetConfig(embed_dim=self.embed_dim, stem_filters=self.stem_filters,
                              block_filters=self.block_filters, seed=self.seed, precision=self.precision)

    def train_config(self):
        from .embednet import TrainConfig
        return TrainConfig(batch_size=self.batch_size, learning_rate=self.learning_rate, epochs=self.epochs,
                           seed=self.seed, margin=self.margin, loss=self.loss, steps_per_epoch=self.steps_per_epoch)

    def svm_grid(self):
        from .classifier import SvmGrid
        return SvmGrid(C=self.svm_c, gamma=self.svm_gamma, folds=self.svm_folds, max_iter=self.svm_max_iter,
                       cv_max_samples=self.svm_cv_samples, seed=self.seed)

    def keypoint_settings(self) -> dict:
        return {'octaves': self.octaves, 'scales_per_octave': self.scales_per_octave, 'base_sigma': self.base_sigma,
                'contrast_threshold': self.contrast_threshold, 'edge_threshold': self.edge_threshold,
                'limit': self.max_patches_per_word}

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def form_defaults() -> Dict[str, str]:
    return {name: str(value.kwargs.get('default'))
            for name, value in vars(PipelineConfigForm).items() if isinstance(value, UnboundField)}


def parse_config_text(text: str, source: str = '<config>') -> Dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    values, errors = {}, []
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        if not sep or not key.strip():
            errors.append(f'{source}:{number}: expected `key = value`')
            continue
        values[key.strip()] = value.strip()
    if errors:
        raise ConfigError('; '.join(errors))
    return values


def parse_overrides(overrides: Iterable[str]) -> Dict[str, str]:
    return parse_config_text('\n'.join(overrides), '--set')


def merged_text(config_text: str, overrides: Iterable[str]) -> str:
    lines = config_text.rstrip('\n').splitlines() if config_text else []
    overrides = list(overrides)
    if overrides:
        lines.append('# --set overrides')
        lines.extend(overrides)
    return '\n'.join(lines) + '\n' if lines else ''


def validate_values(values: Dict[str, str]) -> PipelineConfig:
    """Validate key/values with :class:`PipelineConfigForm`; must run inside an application context.

    An empty value restores the default.
    """
    defaults = form_defaults()
    unknown = sorted(set(values) - set(defaults))
    if unknown:
        raise ConfigError(f'Unknown configuration keys: {", ".join(unknown)}')
    values = {key: value for key, value in values.items() if value != ''}
    form = PipelineConfigForm(formdata=MultiDict({**defaults, **values}))
    if not form.validate():
        details = '; '.join(f'{name}: {" ".join(messages)}' for name, messages in sorted(form.errors.items()))
        raise ConfigError(f'Invalid configuration: {details}')
    data = form.data
    lambda1 = str(data['spca_lambda1']).strip()
    return PipelineConfig(
        seed=data['seed'],
        denoise_sigma=data['denoise_sigma'],
        denoise_threshold=data['denoise_threshold'],
        clean_words=str(data['clean_words']) == 'true',
        log_sigma=data['log_sigma'],
        min_area=data['min_area'],
        octaves=data['octaves'],
        scales_per_octave=data['scales_per_octave'],
        base_sigma=data['base_sigma'],
        contrast_threshold=data['contrast_threshold'],
        edge_threshold=data['edge_threshold'],
        patch_size_factor=data['patch_size_factor'],
        max_patches_per_word=data['max_patches_per_word'],
        embed_dim=data['embed_dim'],
        stem_filters=data['stem_filters'],
        block_filters=tuple(parse_number_list(data['block_filters'], int)),
        precision=data['precision'],
        loss=data['loss'],
        margin=data['margin'],
        batch_size=data['batch_size'],
        learning_rate=data['learning_rate'],
        epochs=data['epochs'],
        steps_per_epoch=data['steps_per_epoch'],
        embed_corpus=data['embed_corpus'],
        omniglot_root=data['omniglot_root'] or '',
        spca_components=data['spca_components'],
        spca_lambda=data['spca_lambda'],
        spca_lambda1=lambda1 if lambda1 == 'auto' else float(lambda1),
        spca_sample=data['spca_sample'],
        kl_epsilon=data['kl_epsilon'],
        weight_mode=data['weight_mode'],
        svm_c=tuple(parse_number_list(data['svm_c'])),
        svm_gamma=tuple(g.strip() if g.strip() == 'scale' else float(g)
                        for g in str(data['svm_gamma']).split(',') if g.strip()),
        svm_folds=data['svm_folds'],
        svm_cv_samples=data['svm_cv_samples'],
        svm_max_iter=data['svm_max_iter'],
        fusion=data['fusion'],
    )


def load_pipeline_config(config_file: Optional[str] = None, overrides: Iterable[str] = ()) -> Tuple[PipelineConfig, str]:
    """Read, merge and validate settings; returns the config and the merged text to embed in bundles."""
    overrides = list(overrides)
    text = ''
    if config_file:
        try:
            with open(config_file) as fp:
                text = fp.read()
        except OSError as e:
            raise ConfigError(f'Cannot read configuration file `{config_file}`: {e}') from e
    values = parse_config_text(text, config_file or '<config>')
    values.update(parse_overrides(overrides))
    return validate_values(values), merged_text(text, overrides)
