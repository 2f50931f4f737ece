/**
 * Prompt template sets for zero-shot text prototypes. `{}` marks where the
 * class name goes. The 180-template ensemble aggregates the widely used
 * prompt collections published for CLIP-style zero-shot classification
 * (generic photo prompts plus the per-domain variants); provenance is
 * recorded in the output container metadata.
 */

const GENERIC_80 = [
  "a bad photo of a {}.",
  "a photo of many {}.",
  "a sculpture of a {}.",
  "a photo of the hard to see {}.",
  "a low resolution photo of the {}.",
  "a rendering of a {}.",
  "graffiti of a {}.",
  "a bad photo of the {}.",
  "a cropped photo of the {}.",
  "a tattoo of a {}.",
  "the embroidered {}.",
  "a photo of a hard to see {}.",
  "a bright photo of a {}.",
  "a photo of a clean {}.",
  "a photo of a dirty {}.",
  "a dark photo of the {}.",
  "a drawing of a {}.",
  "a photo of my {}.",
  "the plastic {}.",
  "a photo of the cool {}.",
  "a close-up photo of a {}.",
  "a black and white photo of the {}.",
  "a painting of the {}.",
  "a painting of a {}.",
  "a pixelated photo of the {}.",
  "a sculpture of the {}.",
  "a bright photo of the {}.",
  "a cropped photo of a {}.",
  "a plastic {}.",
  "a photo of the dirty {}.",
  "a jpeg corrupted photo of a {}.",
  "a blurry photo of the {}.",
  "a photo of the {}.",
  "a good photo of the {}.",
  "a rendering of the {}.",
  "a {} in a video game.",
  "a photo of one {}.",
  "a doodle of a {}.",
  "a close-up photo of the {}.",
  "a photo of a {}.",
  "the origami {}.",
  "the {} in a video game.",
  "a sketch of a {}.",
  "a doodle of the {}.",
  "a origami {}.",
  "a low resolution photo of a {}.",
  "the toy {}.",
  "a rendition of the {}.",
  "a photo of the clean {}.",
  "a photo of a large {}.",
  "a rendition of a {}.",
  "a photo of a nice {}.",
  "a photo of a weird {}.",
  "a blurry photo of a {}.",
  "a cartoon {}.",
  "art of a {}.",
  "a sketch of the {}.",
  "a embroidered {}.",
  "a pixelated photo of a {}.",
  "itap of the {}.",
  "a jpeg corrupted photo of the {}.",
  "a good photo of a {}.",
  "a plushie {}.",
  "a photo of the nice {}.",
  "a photo of the small {}.",
  "a photo of the weird {}.",
  "the cartoon {}.",
  "art of the {}.",
  "a drawing of the {}.",
  "a photo of the large {}.",
  "a black and white photo of a {}.",
  "the plushie {}.",
  "a dark photo of a {}.",
  "itap of a {}.",
  "graffiti of the {}.",
  "a toy {}.",
  "itap of my {}.",
  "a photo of a cool {}.",
  "a photo of a small {}.",
  "a tattoo of the {}.",
];

const CONTRAST_AND_SIZE = [
  "a low contrast photo of a {}.",
  "a high contrast photo of a {}.",
  "a photo of a big {}.",
  "a low contrast photo of the {}.",
  "a high contrast photo of the {}.",
  "a photo of the big {}.",
];

const TEXTURES_AND_OBJECTS = [
  "a photo of a {} texture.",
  "a photo of a {} pattern.",
  "a photo of a {} thing.",
  "a photo of a {} object.",
  "a photo of the {} texture.",
  "a photo of the {} pattern.",
  "a photo of the {} thing.",
  "a photo of the {} object.",
];

const TYPED_DOMAINS = [
  "a photo of a {}, a type of aircraft.",
  "a photo of the {}, a type of aircraft.",
  "a photo of a {}, a type of flower.",
  "a photo of {}, a type of food.",
  "a photo of a {}, a type of pet.",
  "a photo of a {}, a type of bird.",
];

const POSSESSIVE = [
  "i love my {}!",
  "a photo of my dirty {}.",
  "a photo of my clean {}.",
  "a photo of my new {}.",
  "a photo of my old {}.",
];

const ACTIONS = (() => {
  const media = ["a photo of", "a video of", "a example of", "a demonstration of"];
  const articles = ["a person", "the person"];
  const verbs = ["{}.", "using {}.", "doing {}.", "during {}.", "performing {}.", "practicing {}."];
  const out: string[] = [];
  for (const m of media) {
    for (const a of articles) {
      for (const v of verbs) {
        out.push(`${m} ${a} ${v}`);
      }
    }
  }
  return out;
})();

const PLACES = [
  "a photo i took in {}.",
  "a photo i took while visiting {}.",
  "a photo from my home country of {}.",
  "a photo from my visit to {}.",
  "a photo showing the country of {}.",
];

const OVERHEAD = (() => {
  const sensors = ["satellite", "aerial"];
  const kinds = ["imagery", "photo"];
  const articles = ["{}.", "a {}.", "the {}."];
  const out: string[] = [
    "a centered satellite photo of {}.",
    "a centered satellite photo of a {}.",
    "a centered satellite photo of the {}.",
  ];
  for (const s of sensors) {
    for (const k of kinds) {
      for (const a of articles) {
        out.push(`${s} ${k} of ${a}`);
      }
    }
  }
  return out;
})();

const MISC = [
  'a photo of the number: "{}".',
  "a {} review of a movie.",
  'a zoomed in photo of a "{}" traffic sign.',
  'a centered photo of a "{}" traffic sign.',
  'a close up photo of a "{}" traffic sign.',
  "this is a photo of {}.",
  "a photo of {} objects.",
];

export const ENSEMBLE_180 = [
  ...GENERIC_80,
  ...CONTRAST_AND_SIZE,
  ...TEXTURES_AND_OBJECTS,
  ...TYPED_DOMAINS,
  ...POSSESSIVE,
  ...ACTIONS,
  ...PLACES,
  ...OVERHEAD,
  ...MISC,
];

export const TEMPLATE_SETS: Record<string, readonly string[]> = {
  single: ["a photo of a {}."],
  "ensemble-180": ENSEMBLE_180,
};

export function fillTemplate(template: string, className: string): string {
  return template.replaceAll("{}", className.replaceAll("_", " "));
}
