#!/usr/bin/env node
/**
 * deepfeat extract --net {alexnet|vgg16} --in DIR --out FILE [--models DIR]
 *
 * Writes FILE (feature file), FILE.labels (id,class_label sidecar) and
 * FILE.manifest.json (skipped-file record).
 */

import yargs from 'yargs'
import { hideBin } from 'yargs/helpers'
import { extractFeatures, useCpuBackend } from './extract.js'
import { SUPPORTED_NETWORKS, type NetworkName } from './networks.js'

export async function main(argv: string[]): Promise<number> {
  const parser = yargs(argv)
    .scriptName('deepfeat')
    .command('extract', 'extract deep features from an image directory', (y) =>
      y
        .option('net', {
          choices: SUPPORTED_NETWORKS,
          demandOption: true,
          describe: 'pretrained network to use',
        })
        .option('in', {
          type: 'string',
          demandOption: true,
          describe: 'directory of .tif/.png images named <class>_<index>.<ext>',
        })
        .option('out', {
          type: 'string',
          demandOption: true,
          describe: 'output feature file path',
        })
        .option('models', {
          type: 'string',
          default: process.env.DEEPFEAT_MODELS_DIR ?? 'models',
          describe: 'directory holding <net>/model.json weight bundles',
        })
        .option('batch', { type: 'number', default: 16 }),
    )
    .demandCommand(1)
    .strict()
    .fail((msg, err) => {
      throw err ?? new Error(msg)
    })

  let args
  try {
    args = await parser.parse()
  } catch (err) {
    console.error(`usage error: ${err instanceof Error ? err.message : err}`)
    return 2
  }

  try {
    await useCpuBackend()
    const result = await extractFeatures({
      inputDir: args.in as string,
      outPath: args.out as string,
      net: args.net as NetworkName,
      modelsDir: args.models as string,
      batchSize: args.batch as number,
    })
    console.error(
      `wrote ${result.count} x ${result.dim} features to ${args.out}` +
        (result.skipped.length ? ` (${result.skipped.length} skipped)` : ''),
    )
    return 0
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`)
    return 1
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split('/').pop()!)
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code
  })
}
