public void forward(String xml) {
    Object o = xstream.fromXML(xml);
    String note = "n";
    log(o);
    log(note);
}
