/** Incremental parser for the feedback event stream.  Frames arrive as
 * "data: {json}\n\n"; chunk boundaries can fall anywhere, including inside
 * a UTF-8 code point (the caller feeds decoded text, so only frame
 * boundaries matter here). */

export class SseParser {
  private buffer = "";

  /** Feed one chunk of decoded stream text; returns the payloads of every
   * frame completed by it. */
  push(chunk: string): string[] {
    this.buffer += chunk;
    const frames: string[] = [];
    for (;;) {
      const end = this.buffer.indexOf("\n\n");
      if (end < 0) {
        break;
      }
      const frame = this.buffer.slice(0, end);
      this.buffer = this.buffer.slice(end + 2);
      const data = frame
        .split("\n")
        .filter((line) => line.startsWith("data:"))
        .map((line) => line.slice(5).trimStart())
        .join("\n");
      if (data !== "") {
        frames.push(data);
      }
    }
    return frames;
  }

  get pending(): string {
    return this.buffer;
  }
}
