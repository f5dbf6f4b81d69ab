/**
 * Client-side tokenizer mirroring the service: lowercase, word runs and
 * single punctuation marks. Used only for provisional chip display while the
 * annotator edits the question; the stored token list always comes from the
 * server response.
 */
export function tokenize(text: string): string[] {
  return text.toLowerCase().match(/\w+|[^\w\s]/g) ?? [];
}
