from flask_wtf import FlaskForm
from wtforms import StringField, FloatField, IntegerField
from wtforms.validators import AnyOf, NumberRange, Optional
from wtforms.validators import ValidationError


def parse_number_list(value: str, cast=float) -> list:
    return [cast(item.strip()) for item in str(value).split(',') if item.strip()]


class NumberListValidator(object):
    """Validates a comma-separated list of positive numbers."""
    def __init__(self, cast=float, allowed_words=(), message=None):
        self.cast = cast
        self.allowed_words = tuple(allowed_words)
        if not message:
            words = f" or {', '.join(self.allowed_words)}" if self.allowed_words else ''
            message = f'Field must be a comma-separated list of positive numbers{words}.'
        self.message = message

    def __call__(self, form, field):
        items = [item.strip() for item in str(field.data or '').split(',') if item.strip()]
        if not items:
            raise ValidationError(self.message)
        for item in items:
            if item in self.allowed_words:
                continue
            try:
                if self.cast(item) <= 0:
                    raise ValidationError(self.message)
            except ValueError:
                raise ValidationError(self.message)


class AutoOrNonNegativeValidator(object):
    """Validates a field holding `auto` or a non-negative number."""
    def __init__(self, message=None):
        if not message:
            message = 'Field must be `auto` or a non-negative number.'
        self.message = message

    def __call__(self, form, field):
        if str(field.data).strip() == 'auto':
            return
        try:
            if float(field.data) < 0:
                raise ValidationError(self.message)
        except (TypeError, ValueError):
            raise ValidationError(self.message)


class PipelineConfigForm(FlaskForm):
    seed = IntegerField('seed', validators=[Optional(), NumberRange(min=0)], default=0)

    # imaging
    denoise_sigma = FloatField('denoise_sigma', validators=[Optional(), NumberRange(min=1e-6)], default=1.0)
    denoise_threshold = FloatField('denoise_threshold', validators=[Optional(), NumberRange(min=0, max=255)],
                                   default=180.0)
    clean_words = StringField('clean_words', validators=[Optional(), AnyOf(['true', 'false'])], default='true')
    log_sigma = FloatField('log_sigma', validators=[Optional(), NumberRange(min=1e-6)], default=6.0)
    min_area = IntegerField('min_area', validators=[Optional(), NumberRange(min=1)], default=30)

    # keypoints
    octaves = IntegerField('octaves', validators=[Optional(), NumberRange(min=1, max=8)], default=4)
    scales_per_octave = IntegerField('scales_per_octave', validators=[Optional(), NumberRange(min=1, max=8)],
                                     default=3)
    base_sigma = FloatField('base_sigma', validators=[Optional(), NumberRange(min=1e-6)], default=1.6)
    contrast_threshold = FloatField('contrast_threshold', validators=[Optional(), NumberRange(min=1e-9)],
                                    default=0.03)
    edge_threshold = FloatField('edge_threshold', validators=[Optional(), NumberRange(min=1e-9)], default=10.0)
    patch_size_factor = FloatField('patch_size_factor', validators=[Optional(), NumberRange(min=1e-6)],
                                   default=12.0)
    max_patches_per_word = IntegerField('max_patches_per_word', validators=[Optional(), NumberRange(min=0)],
                                        default=8)

    # embedder
    embed_dim = IntegerField('embed_dim', validators=[Optional(), NumberRange(min=1)], default=256)
    stem_filters = IntegerField('stem_filters', validators=[Optional(), NumberRange(min=1)], default=16)
    block_filters = StringField('block_filters', validators=[Optional(), NumberListValidator(int)],
                                default='16,32,64,128')
    precision = StringField('precision', validators=[Optional(), AnyOf(['float64', 'float32'])], default='float64')
    loss = StringField('loss', validators=[Optional(), AnyOf(['triplet', 'contrastive'])], default='triplet')
    margin = FloatField('margin', validators=[Optional(), NumberRange(min=0)], default=0.2)
    batch_size = IntegerField('batch_size', validators=[Optional(), NumberRange(min=1)], default=16)
    learning_rate = FloatField('learning_rate', validators=[Optional(), NumberRange(min=0)], default=0.001)
    epochs = IntegerField('epochs', validators=[Optional(), NumberRange(min=0)], default=10)
    steps_per_epoch = IntegerField('steps_per_epoch', validators=[Optional(), NumberRange(min=0)], default=0)
    embed_corpus = StringField('embed_corpus', validators=[Optional(), AnyOf(['patches', 'omniglot'])],
                               default='patches')
    omniglot_root = StringField('omniglot_root', validators=[Optional()], default='')

    # sparse coding
    spca_components = IntegerField('spca_components', validators=[Optional(), NumberRange(min=0)], default=0)
    spca_lambda = FloatField('spca_lambda', validators=[Optional(), NumberRange(min=0)], default=1e-4)
    spca_lambda1 = StringField('spca_lambda1', validators=[Optional(), AutoOrNonNegativeValidator()],
                               default='auto')
    spca_sample = IntegerField('spca_sample', validators=[Optional(), NumberRange(min=0)], default=0)

    # saliency
    kl_epsilon = FloatField('kl_epsilon', validators=[Optional(), NumberRange(min=0)], default=1e-6)
    weight_mode = StringField('weight_mode', validators=[Optional(), AnyOf(['inverse', 'direct'])],
                              default='inverse')

    # classifier
    svm_c = StringField('svm_c', validators=[Optional(), NumberListValidator(float)], default='0.1,1,10,100')
    svm_gamma = StringField('svm_gamma', validators=[Optional(), NumberListValidator(float, ['scale'])],
                            default='scale,0.01,0.1,1')
    svm_folds = IntegerField('svm_folds', validators=[Optional(), NumberRange(min=2)], default=3)
    svm_cv_samples = IntegerField('svm_cv_samples', validators=[Optional(), NumberRange(min=0)], default=1000)
    svm_max_iter = IntegerField('svm_max_iter', validators=[Optional(), NumberRange(min=1)], default=100000)
    fusion = StringField('fusion', validators=[Optional(), AnyOf(['word', 'page'])], default='word')

    class Meta:
        csrf = False
