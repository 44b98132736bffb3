import os
import sys
from functools import wraps
from os import path

import click
from flask import current_app as app

from .app import executor, set_max_workers
from .config import load_pipeline_config
from .corpus import CORPUS_MANIFEST, IngestionError, generate_synthetic, open_corpus, save_manifest
from .errors import ExitCode, WriterIdError
from .forms import parse_number_list
from .imaging import (SegmentationError, denoise, is_image_file, read_image, regions_as_records, segment_words,
                      write_png, write_regions_jsonl)
from .keypoints import dump_patches
from .logging import exception_as_rfc5424_structured_data, mainLogger
from .pipeline import (INPUT_MODES, SWEEP_DIMS, compare_losses, evaluate_bundle, extract_file, identify,
                       load_bundle, resolve_bundle_path, sweep_dims, train_bundle, write_identification)
from .utils import mkdir, write_json


def handle_errors(command):
    """Exit with the code of a :class:`WriterIdError`; anything else is logged as unexpected and exits 1."""
    @wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except WriterIdError as ex:
            mainLogger.error("%s: %s", type(ex).__name__, str(ex), extra=exception_as_rfc5424_structured_data(ex))
            sys.exit(int(ex.exit_code))
        except (click.exceptions.ClickException, click.exceptions.Exit, click.exceptions.Abort):
            raise
        except Exception as ex:
            mainLogger.error("Unexpected error: %s", str(ex), extra=exception_as_rfc5424_structured_data(ex))
            sys.exit(int(ExitCode.UNEXPECTED))
    return wrapper


def pipeline_options(command):
    command = click.option('--threads', type=click.IntRange(min=1), default=None,
                           help='Maximum worker threads; 1 runs every stage sequentially.')(command)
    command = click.option('--set', 'overrides', multiple=True, metavar='KEY=VALUE',
                           help='Override a configuration key (repeatable).')(command)
    command = click.option('--config', 'config_file', default=None, metavar='FILE',
                           help='Flat `key = value` configuration file.')(command)
    return command


def _setup(config_file, overrides, threads):
    if threads is not None:
        set_max_workers(threads)
    config, text = load_pipeline_config(config_file, overrides)
    return config, text, (executor if app.config['EXECUTOR_MAX_WORKERS'] > 1 else None)


def _input_images(inputs):
    files = []
    for item in inputs:
        if path.isdir(item):
            files.extend(sorted(path.join(item, f) for f in os.listdir(item) if is_image_file(path.join(item, f))))
        else:
            files.append(item)
    return files


@app.cli.command()
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--writers', type=click.IntRange(min=2), default=10, show_default=True)
@click.option('--words', 'words_per_writer', type=click.IntRange(min=4), default=40, show_default=True)
@click.option('--out', required=True, help='Output directory of the word tree.')
@handle_errors
def synth(seed, writers, words_per_writer, out):
    """Render a synthetic multi-writer word corpus."""
    mkdir(out)
    corpus = generate_synthetic(seed, writers, words_per_writer, out)
    save_manifest(corpus, path.join(out, CORPUS_MANIFEST))
    click.echo(path.join(out, CORPUS_MANIFEST))


@app.cli.command()
@click.argument('root')
@click.option('--out', required=True, help='Output root of the word-image layout.')
@pipeline_options
@handle_errors
def segment(root, out, config_file, overrides, threads):
    """Segment page scans under ROOT/<writer>/ into ROOT-style word directories."""
    cfg, _, _ = _setup(config_file, overrides, threads)
    if not path.isdir(root):
        raise IngestionError('Page root is not a directory', [root])
    records = []
    for writer in sorted(d for d in os.listdir(root) if path.isdir(path.join(root, d))):
        for page in _input_images([path.join(root, writer)]):
            document = path.splitext(path.basename(page))[0]
            image = read_image(page)
            regions = segment_words(denoise(image, cfg.denoise_sigma, cfg.denoise_threshold), cfg.log_sigma,
                                    cfg.min_area, source=image)
            if not regions:
                mainLogger.warning('Page %s yields no words', page)
                continue
            mkdir(path.join(out, writer, document))
            for n, (region, record) in enumerate(zip(regions, regions_as_records(regions, page))):
                file_name = path.join(writer, document, f'{n:03d}.png')
                write_png(region.image, path.join(out, file_name))
                records.append({'file': file_name, 'writer': writer, 'document': document, **record})
    if not records:
        raise SegmentationError(f'No word regions found under `{root}`')
    write_regions_jsonl(records, path.join(out, 'regions.jsonl'))
    click.echo(f'{len(records)} words written to {out}')


@app.cli.command()
@click.argument('inputs', nargs=-1, required=True)
@click.option('--out', required=True, help='Output directory of patch PNGs and manifest.jsonl.')
@pipeline_options
@handle_errors
def patches(inputs, out, config_file, overrides, threads):
    """Extract normalised SIFT patches from word images (files or directories)."""
    cfg, _, pool = _setup(config_file, overrides, threads)
    files = _input_images(inputs)
    mapper = pool.map if pool is not None else map
    words = list(mapper(lambda f: extract_file(f, path.splitext(path.basename(f))[0], cfg), files))
    mkdir(out)
    dump_patches([pair for word in words for pair in zip(word.patches, word.keypoints)], out)
    click.echo(f'{sum(len(w.patches) for w in words)} patches from {len(words)} words written to {out}')


@app.cli.command()
@click.argument('corpus_path')
@click.option('--layout', type=click.Choice(['iam', 'cvl']), default='iam', show_default=True,
              help='Directory layout when CORPUS_PATH has no corpus.json.')
@click.option('--bundle', 'bundle_name', default='default', show_default=True,
              help='Bundle directory, or a name under BUNDLE_DIR.')
@click.option('--embed-dim', type=int, default=None, help='Shorthand for --set embed_dim=N.')
@click.option('--ablation', is_flag=True, default=False, help='Also report baseline/sparse/weighted accuracy.')
@click.option('--run-id', default=None)
@pipeline_options
@handle_errors
def train(corpus_path, layout, bundle_name, embed_dim, ablation, run_id, config_file, overrides, threads):
    """Fit the embedder, sparse basis, saliency weights and writer SVMs; write a bundle."""
    overrides = list(overrides) + ([f'embed_dim={embed_dim}'] if embed_dim is not None else [])
    cfg, text, pool = _setup(config_file, overrides, threads)
    corpus = open_corpus(corpus_path, layout, cfg.seed)
    bundle_dir = resolve_bundle_path(bundle_name)
    manifest = train_bundle(corpus, cfg, text, bundle_dir, pool, ablation, run_id)
    click.echo(bundle_dir)
    if ablation:
        for row in manifest['ablation']:
            click.echo(f"{row['mode']}: top1={row['top1']:.4f} top5={row['top5']:.4f}")


@app.cli.command('identify')
@click.argument('bundle_name')
@click.argument('inputs', nargs=-1, required=True)
@click.option('--mode', type=click.Choice(INPUT_MODES), default=None,
              help='word or page input; defaults to the bundle fusion setting.')
@click.option('--topk', type=click.IntRange(min=1), default=5, show_default=True)
@click.option('--out', default=None, help='Report directory (default: OUTPUT_DIR/identify).')
@click.option('--threads', type=click.IntRange(min=1), default=None)
@handle_errors
def identify_command(bundle_name, inputs, mode, topk, out, threads):
    """Rank enrolled writers for word images or pages."""
    if threads is not None:
        set_max_workers(threads)
    pool = executor if app.config['EXECUTOR_MAX_WORKERS'] > 1 else None
    bundle = load_bundle(resolve_bundle_path(bundle_name))
    results = identify(bundle, list(inputs), mode or bundle.config.fusion, pool)
    out = out or path.join(app.config['OUTPUT_DIR'], 'identify')
    mkdir(out)
    write_identification(results, path.join(out, 'identify.csv'), path.join(out, 'identify.json'),
                         min(topk, len(bundle.writers)))
    click.echo(path.join(out, 'identify.csv'))


@app.cli.command('eval')
@click.argument('bundle_name')
@click.argument('corpus_path')
@click.option('--layout', type=click.Choice(['iam', 'cvl']), default='iam', show_default=True)
@click.option('--out', default=None, help='Report directory (default: OUTPUT_DIR/eval/<bundle>).')
@click.option('--threads', type=click.IntRange(min=1), default=None)
@handle_errors
def evaluate_command(bundle_name, corpus_path, layout, out, threads):
    """Top-1/Top-5, per-writer breakdown and word-count curve on the test split."""
    if threads is not None:
        set_max_workers(threads)
    pool = executor if app.config['EXECUTOR_MAX_WORKERS'] > 1 else None
    bundle_dir = resolve_bundle_path(bundle_name)
    bundle = load_bundle(bundle_dir)
    corpus = open_corpus(corpus_path, layout, bundle.config.seed)
    out = out or path.join(app.config['OUTPUT_DIR'], 'eval', path.basename(path.normpath(bundle_dir)))
    mkdir(out)
    summary = evaluate_bundle(bundle, corpus, out, pool)
    click.echo(f"top1={summary['top1']:.4f} top5={summary['top5']:.4f}")


@app.cli.command('compare-losses')
@click.argument('corpus_path')
@click.option('--layout', type=click.Choice(['iam', 'cvl']), default='iam', show_default=True)
@click.option('--out', required=True, help='CSV file with loss, dbi and final_loss columns.')
@pipeline_options
@handle_errors
def compare_losses_command(corpus_path, layout, out, config_file, overrides, threads):
    """Davies-Bouldin index of triplet- versus contrastive-trained embedders."""
    cfg, _, pool = _setup(config_file, overrides, threads)
    table = compare_losses(open_corpus(corpus_path, layout, cfg.seed), cfg, pool)
    mkdir(path.dirname(path.abspath(out)))
    table.to_csv(out, index=False, float_format='%.6f')
    click.echo(out)


@app.cli.command('sweep-dim')
@click.argument('corpus_path')
@click.option('--layout', type=click.Choice(['iam', 'cvl']), default='iam', show_default=True)
@click.option('--dims', default=','.join(str(d) for d in SWEEP_DIMS), show_default=True)
@click.option('--out', required=True, help='CSV file with embed_dim, top1 and top5 columns.')
@pipeline_options
@handle_errors
def sweep_dim_command(corpus_path, layout, dims, out, config_file, overrides, threads):
    """Word-level accuracy of the full pipeline for each embedding dimension."""
    cfg, _, pool = _setup(config_file, overrides, threads)
    try:
        dims = parse_number_list(dims, int)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint='--dims')
    table = sweep_dims(open_corpus(corpus_path, layout, cfg.seed), cfg, dims, pool)
    mkdir(path.dirname(path.abspath(out)))
    table.to_csv(out, index=False, float_format='%.6f')
    write_json(table.to_dict(orient='records'), path.splitext(out)[0] + '.json')
    click.echo(out)
